fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("PMM_LOG", "warn")).init();
    std::process::exit(pmm_forecast::cli::main_with_args(std::env::args_os()));
}
