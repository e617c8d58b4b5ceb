fn main() {
    std::process::exit(qutrit_dephasing_cli::app::run(std::env::args_os()));
}
