fn main() {
    std::process::exit(bstm_cli::run(std::env::args_os()));
}
