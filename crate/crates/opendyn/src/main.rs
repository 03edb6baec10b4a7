fn main() {
    std::process::exit(opendyn::cli::main_with(std::env::args_os()));
}
