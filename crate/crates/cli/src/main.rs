fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter("LQPADMM_LOG")).init();
    std::process::exit(lqpadmm_cli::entry(std::env::args_os()));
}
