fn main() {
    std::process::exit(kinetic_moser::cli::run(std::env::args_os()));
}
