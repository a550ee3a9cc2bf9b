fn main() {
    std::process::exit(bmfuse::cli::run(std::env::args_os()));
}
