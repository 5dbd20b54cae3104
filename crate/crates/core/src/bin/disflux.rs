fn main() {
    std::process::exit(disflux::cli::main_with_args(std::env::args_os()));
}
