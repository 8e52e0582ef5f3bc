// temporary calibration harness
use appraise::corpus::{default_ui_vocabulary, default_vocabulary, generate_app, analyze_app, CorpusSpec};
use appraise::nn::Hyper;
use appraise::pipeline::{kfold_evaluate, EvalConfig};
use appraise::records::AppRecord;
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let napps: usize = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(200);
    let repeats: usize = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(2);
    let margin: f64 = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(1.0);

    let spec = CorpusSpec { seed: 7, app_count: napps, margin, ..CorpusSpec::default() };
    let vocab = default_vocabulary();
    let ui = default_ui_vocabulary();
    let t0 = Instant::now();
    let records: Vec<AppRecord> = (0..napps)
        .map(|i| {
            let app = generate_app(&spec, i);
            analyze_app(&app.id, app.stars, &app.program, &app.docs, &vocab, &ui)
                .unwrap()
                .record
        })
        .collect();
    println!("analyzed {napps} apps in {:?}", t0.elapsed());

    let hyper = Hyper::default();
    for config in [EvalConfig::UiOnly, EvalConfig::ExecOnly, EvalConfig::Full] {
        let t = Instant::now();
        let (report, _) = kfold_evaluate(&records, 10, repeats, config, &hyper, 7).unwrap();
        let (acc, std) = report.mean_std(|c| c.accuracy());
        let (prec, _) = report.mean_std(|c| c.precision());
        let (rec, _) = report.mean_std(|c| c.recall());
        println!(
            "{:<10} acc {:.4} ± {:.4}  prec {:.4}  rec {:.4}   [{:?}]",
            config.name(), acc, std, prec, rec, t.elapsed()
        );
    }
}
