fn main() {
    std::process::exit(abceval::service::cli::run(std::env::args_os()));
}
