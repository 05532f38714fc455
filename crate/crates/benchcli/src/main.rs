fn main() {
    std::process::exit(benchcli::cli::run(std::env::args_os()));
}
