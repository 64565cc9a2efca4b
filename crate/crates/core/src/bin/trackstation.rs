fn main() {
    std::process::exit(trackstation::cli::run(std::env::args_os()));
}
