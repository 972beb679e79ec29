use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use arrayopt_core::array_factor::{
    beamwidth_3db, evaluate_af, sll_peaks, true_cost, u_cut, write_cut_csv, CostParams, CutAxis, UVGrid,
};
use arrayopt_core::dataset::{generate_dataset, select_top_k, Dataset};
use arrayopt_core::geometry::{min_pairwise_distance, GenerationConfig, MAX_ELEMENTS};
use arrayopt_core::geometry_optimizer::{
    optimize_hard_check, optimize_with_penalty, ConstraintMode, PenaltyConfig, RunConfig, RunRecord, Scoring,
};
use arrayopt_core::layout_file::{read_layout_file, write_layout_file};
use arrayopt_core::surrogate::{examples_from, sidecar_path, Arch, SetTransformerConfig, Surrogate, TrainConfig};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::{ArchArg, EvaluateArgs, GenDataArgs, ModeArg, OptimizeArgs, TrainArgs, Usage};

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

fn as_usage(e: impl std::fmt::Display) -> anyhow::Error {
    usage(e.to_string())
}

fn require_file(path: &Path) -> Result<()> {
    if !path.is_file() {
        return Err(usage(format!("input file {} does not exist", path.display())));
    }
    Ok(())
}

fn require_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() && !p.is_dir() => {
            Err(usage(format!("output directory {} does not exist", p.display())))
        }
        _ => Ok(()),
    }
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn read_dataset(path: &Path) -> Result<Dataset> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Dataset::read_jsonl(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))
}

fn arch_of(a: ArchArg) -> Arch {
    match a {
        ArchArg::Fnn => Arch::Fnn,
        ArchArg::SetTransformer => Arch::SetTransformer,
    }
}

fn thread_pool(workers: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        b = b.num_threads(w);
    }
    Ok(b.build()?)
}

pub fn gen_data(a: GenDataArgs, workers: Option<usize>) -> Result<()> {
    require_parent(&a.out)?;
    if a.split_y == 0 || a.split_z == 0 {
        return Err(usage("--split-y and --split-z must be at least 1"));
    }
    let mut gen = GenerationConfig::partitioned(a.width, a.height.unwrap_or(a.width), a.split_y, a.split_z, a.seed);
    gen.period_y_range = (a.period_min, a.period_max);
    gen.period_z_range = (a.period_min, a.period_max);
    gen.rotation_range = (0.0, a.rotation_max_deg.to_radians());
    gen.seam_min_distance = a.seam;
    gen.validate().map_err(as_usage)?;
    let params = CostParams { p: a.p };
    params.validate().map_err(as_usage)?;
    let grid = UVGrid::for_aperture(gen.aperture, a.grid_samples).map_err(as_usage)?;

    let start = Instant::now();
    let ds = generate_dataset(a.n as usize, &gen, &grid, params, workers)?;
    let mut w = BufWriter::new(File::create(&a.out).with_context(|| format!("creating {}", a.out.display()))?);
    ds.write_jsonl(&mut w)?;
    w.flush()?;

    let costs: Vec<f64> = ds.configs.iter().map(|c| c.true_cost).collect();
    let min = costs.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = costs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mean = costs.iter().sum::<f64>() / costs.len() as f64;
    println!("wrote {} configs to {}", ds.len(), a.out.display());
    println!("cost min {min:.4} mean {mean:.4} max {max:.4}");
    println!("elapsed {:.2}s", start.elapsed().as_secs_f64());
    Ok(())
}

pub fn train(a: TrainArgs) -> Result<()> {
    require_file(&a.data)?;
    require_parent(&a.out_model)?;
    let arch = arch_of(a.arch);
    let mut cfg = TrainConfig::for_arch(arch);
    cfg.epochs = a.epochs.unwrap_or(cfg.epochs);
    cfg.lr = a.lr.unwrap_or(cfg.lr);
    cfg.batch_size = a.batch_size.unwrap_or(cfg.batch_size);
    cfg.seed = a.seed;
    cfg.validate().map_err(as_usage)?;
    if !(0.0..1.0).contains(&a.val_fraction) {
        return Err(usage(format!("--val-fraction {} not in [0, 1)", a.val_fraction)));
    }
    if a.layer_norm && arch == Arch::Fnn {
        return Err(usage("--layer-norm applies to the set-transformer only"));
    }

    let ds = read_dataset(&a.data)?;
    let (train_set, val_set) = if a.val_fraction == 0.0 {
        (examples_from(&ds), Vec::new())
    } else {
        let (t, v) = ds.split(1.0 - a.val_fraction, a.seed).map_err(as_usage)?;
        (examples_from(&t), examples_from(&v))
    };
    let st = SetTransformerConfig {
        layer_norm: a.layer_norm,
        ..Default::default()
    };
    let mut model = Surrogate::new(arch, st, a.seed)?;
    let start = Instant::now();
    let report = model.train(&train_set, &val_set, &cfg)?;
    let elapsed = start.elapsed().as_secs_f64();
    model.save(&a.out_model)?;

    let loss_path = a.loss_out.unwrap_or_else(|| with_suffix(&a.out_model, ".loss.csv"));
    let mut csv = String::from("epoch,loss\n");
    for (i, l) in report.loss_history.iter().enumerate() {
        csv.push_str(&format!("{i},{l}\n"));
    }
    fs::write(&loss_path, csv).with_context(|| format!("writing {}", loss_path.display()))?;

    let final_loss = report.loss_history.last().copied();
    let metrics = json!({
        "arch": arch,
        "train_size": train_set.len(),
        "val_size": val_set.len(),
        "train_config": cfg,
        "final_train_loss": final_loss,
        "validation": report.validation,
    });
    let metrics_path = a.metrics_out.unwrap_or_else(|| with_suffix(&a.out_model, ".metrics.json"));
    write_json(&metrics_path, &metrics)?;

    println!(
        "trained {arch:?} on {} configs ({} held out) in {elapsed:.1}s",
        train_set.len(),
        val_set.len()
    );
    if let Some(l) = final_loss {
        println!("final train loss {l:.6}");
    }
    if let Some(v) = report.validation {
        match v.pearson_r {
            Some(r) => println!("validation mse {:.6} pearson r {r:.4}", v.mse),
            None => println!("validation mse {:.6}", v.mse),
        }
    }
    println!(
        "model {} (sidecar {})",
        a.out_model.display(),
        sidecar_path(&a.out_model).display()
    );
    Ok(())
}

pub fn optimize(a: OptimizeArgs, workers: Option<usize>) -> Result<()> {
    require_file(&a.model)?;
    require_file(&sidecar_path(&a.model))?;
    require_file(&a.data)?;
    let model = Surrogate::load(&a.model).with_context(|| format!("loading {}", a.model.display()))?;
    if let Some(expected) = a.arch.map(arch_of) {
        if expected != model.arch() {
            return Err(usage(format!(
                "model {} is {:?}, expected {expected:?}",
                a.model.display(),
                model.arch()
            )));
        }
    }
    let ds = read_dataset(&a.data)?;
    let top = select_top_k(&ds, a.top_k as usize).map_err(as_usage)?;
    if let Some(c) = top.iter().find(|c| c.elements.len() > MAX_ELEMENTS) {
        return Err(usage(format!(
            "config {} has {} elements, the model input holds {MAX_ELEMENTS}",
            c.config_id,
            c.elements.len()
        )));
    }

    let mut pen = PenaltyConfig::for_arch(model.arch());
    pen.theta = a.theta;
    pen.epsilon = a.epsilon.unwrap_or(pen.epsilon);
    pen.validate().map_err(as_usage)?;
    let run = RunConfig {
        max_iterations: a.iterations,
        lr: a.lr,
        mode: match a.mode {
            ModeArg::Hard => ConstraintMode::HardCheck,
            ModeArg::Penalty => ConstraintMode::Penalty,
        },
        clamp_to_aperture: !a.no_clamp,
        seed: a.seed,
    };
    run.validate().map_err(as_usage)?;
    let scoring = Scoring {
        grid: ds.grid()?,
        params: ds.cost_params(),
    };
    fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;

    let start = Instant::now();
    let records: Vec<RunRecord> = thread_pool(workers)?.install(|| {
        top.par_iter()
            .map(|c| -> Result<RunRecord> {
                let layout = c.layout()?;
                let mut rec = match run.mode {
                    ConstraintMode::HardCheck => optimize_hard_check(&layout, &model, &run, pen.theta, &scoring),
                    ConstraintMode::Penalty => optimize_with_penalty(&layout, &model, &run, &pen, &scoring),
                }
                .with_context(|| format!("optimizing config {}", c.config_id))?;
                rec.config_id = Some(c.config_id);
                Ok(rec)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let elapsed = start.elapsed().as_secs_f64();

    let mut summary = String::from("config,cost_before,cost_after,pct_change\n");
    let mut table = format!("{:>8} {:>16} {:>16} {:>10}\n", "Config", "Cost Bef.", "Cost Aft.", "%Chg");
    for rec in &records {
        let id = rec.config_id.unwrap_or_default();
        let export = rec.export();
        write_json(&a.out_dir.join(format!("run_{id}.json")), &export)?;
        let mut meta = Map::new();
        meta.insert("config_id".into(), Value::from(id));
        meta.insert("cost".into(), Value::from(rec.cost_after));
        write_layout_file(&a.out_dir.join(format!("layout_{id}.json")), &rec.final_layout, meta)?;
        summary.push_str(&format!("{id},{},{},{}\n", rec.cost_before, rec.cost_after, export.pct_change));
        table.push_str(&format!(
            "{id:>8} {:>16.2} {:>16.2} {:>9.2}%\n",
            rec.cost_before, rec.cost_after, export.pct_change
        ));
    }
    fs::write(a.out_dir.join("summary.csv"), summary)?;

    let n = records.len() as f64;
    let improved = records.iter().filter(|r| r.cost_after < r.cost_before).count();
    let mean_pct = records.iter().map(|r| r.pct_change()).sum::<f64>() / n;
    let mean_dist = records.iter().map(|r| r.min_dist_after).sum::<f64>() / n;
    print!("{table}");
    println!(
        "improved {improved}/{} mean %Chg {mean_pct:.2}% mean final min distance {mean_dist:.4}",
        records.len()
    );
    println!("elapsed {elapsed:.1}s, outputs in {}", a.out_dir.display());
    Ok(())
}

pub fn evaluate(a: EvaluateArgs) -> Result<()> {
    require_file(&a.layout)?;
    if let Some(p) = &a.metrics_out {
        require_parent(p)?;
    }
    let (layout, _) = read_layout_file(&a.layout).with_context(|| format!("reading {}", a.layout.display()))?;
    let params = CostParams { p: a.p };
    params.validate().map_err(as_usage)?;
    let grid = UVGrid::for_aperture(layout.aperture(), a.grid_samples).map_err(as_usage)?;
    let af = evaluate_af(&layout, &grid)?;
    let cost = true_cost(&af, params)?;

    if let Some(dir) = &a.cuts_out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut axes = Map::new();
    let mut shortfall = false;
    for axis in [CutAxis::Uy, CutAxis::Uz] {
        let cut = u_cut(&af, axis)?;
        let sll = sll_peaks(&cut.db);
        shortfall |= sll.shortfall;
        let bw = beamwidth_3db(&cut).ok();
        if let Some(dir) = &a.cuts_out {
            let path = dir.join(format!("{}.csv", axis.name()));
            let mut w = BufWriter::new(File::create(&path)?);
            write_cut_csv(&cut, &mut w)?;
            w.flush()?;
        }
        println!(
            "{}: first SLL {} dB, second SLL {} dB, 3 dB beamwidth {}",
            axis.name(),
            fmt_opt(sll.first_db, 2),
            fmt_opt(sll.second_db, 2),
            bw.map_or("n/a".into(), |b| format!("{:.3} deg", b.degrees)),
        );
        axes.insert(
            axis.name().into(),
            json!({
                "first_sll_db": sll.first_db,
                "second_sll_db": sll.second_db,
                "sll_shortfall": sll.shortfall,
                "beamwidth_u": bw.map(|b| b.u_width),
                "beamwidth_deg": bw.map(|b| b.degrees),
            }),
        );
    }
    let min_dist = min_pairwise_distance(&layout).ok();
    println!(
        "{} elements, true cost {cost:.4}, min distance {}",
        layout.len(),
        fmt_opt(min_dist, 4)
    );
    if let Some(path) = &a.metrics_out {
        let metrics = json!({
            "n_elements": layout.len(),
            "true_cost": cost,
            "min_distance": min_dist,
            "sll_shortfall": shortfall,
            "grid_samples": a.grid_samples,
            "cuts": axes,
        });
        write_json(path, &metrics)?;
    }
    Ok(())
}

fn fmt_opt(v: Option<f64>, digits: usize) -> String {
    v.map_or("n/a".into(), |x| format!("{x:.digits$}"))
}
