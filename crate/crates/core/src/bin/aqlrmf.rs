fn main() {
    std::process::exit(aqlrmf::cli::run(std::env::args_os()));
}
