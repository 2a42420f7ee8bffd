use lseries_cli::cases::{catalog, run_case};
use lseries_cli::config::Config;

fn main() {
    let cfg = Config::default();
    let args: Vec<String> = std::env::args().collect();
    let want = args.get(1).cloned().unwrap_or_default();
    for def in catalog(&cfg) {
        if !def.full_id().starts_with(&want) {
            continue;
        }
        let t = std::time::Instant::now();
        let vc = run_case(&def);
        eprintln!(
            "{:10.1} ms {} {:?} {}",
            t.elapsed().as_secs_f64() * 1e3,
            def.full_id(),
            vc.status,
            def.params
        );
    }
}
