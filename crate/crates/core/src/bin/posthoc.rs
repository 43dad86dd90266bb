fn main() {
    std::process::exit(posthoc::cli::run(std::env::args_os()));
}
