fn main() {
    std::process::exit(autolab_cli::run(std::env::args_os()));
}
