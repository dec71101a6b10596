fn main() {
    std::process::exit(gradperm::cli::run(std::env::args_os()));
}
