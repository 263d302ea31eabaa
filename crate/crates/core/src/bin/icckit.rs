fn main() {
    std::process::exit(icckit::cli::run(std::env::args_os()));
}
