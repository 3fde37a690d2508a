fn main() {
    std::process::exit(expert_km_cli::run(std::env::args_os()));
}
