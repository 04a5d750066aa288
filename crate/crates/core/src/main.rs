fn main() {
    let code = decaylab::cli::run(std::env::args_os(), std::env::vars().collect());
    std::process::exit(code);
}
