fn main() {
    std::process::exit(lecam::cli::run(std::env::args_os()));
}
