fn main() {
    std::process::exit(bpbr::cli::run(std::env::args_os()));
}
