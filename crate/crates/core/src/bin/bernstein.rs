fn main() {
    std::process::exit(bernstein_calculus::cli::run(std::env::args_os()));
}
