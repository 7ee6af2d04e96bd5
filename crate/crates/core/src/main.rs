fn main() {
    std::process::exit(featgan::cli::run(std::env::args_os()));
}
