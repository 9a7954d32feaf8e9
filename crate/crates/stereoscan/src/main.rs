fn main() {
    std::process::exit(stereoscan::cli::run(std::env::args_os()));
}
