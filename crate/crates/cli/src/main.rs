fn main() {
    std::process::exit(steady_ga_cli::run(std::env::args_os()));
}
