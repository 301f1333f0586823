fn main() {
    std::process::exit(qstokes::cli::run(std::env::args_os()));
}
