fn main() {
    std::process::exit(lmg_stieltjes::cli::main_with_args(std::env::args_os()));
}
