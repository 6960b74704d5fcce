fn main() {
    std::process::exit(ddc_cli::main_with(std::env::args_os()));
}
