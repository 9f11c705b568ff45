fn main() {
    std::process::exit(culturality::cli::run_pipeline(std::env::args_os()));
}
