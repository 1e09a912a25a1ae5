fn main() {
    std::process::exit(oprisk::cli::run(std::env::args_os()));
}
