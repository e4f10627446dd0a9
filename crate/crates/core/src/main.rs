fn main() {
    std::process::exit(lact_core::cli::run(std::env::args_os()));
}
