fn main() {
    std::process::exit(cliquedex_cli::run(std::env::args_os()));
}
