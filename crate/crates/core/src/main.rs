fn main() {
    std::process::exit(dxtree::cli::run(std::env::args_os()));
}
