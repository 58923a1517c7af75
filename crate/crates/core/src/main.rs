fn main() {
    std::process::exit(mapkit::cli::run(std::env::args_os()));
}
