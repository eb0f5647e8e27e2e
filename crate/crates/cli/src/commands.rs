use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use log::{info, warn};
use serde::{Deserialize, Serialize};

use svqa_core::disparity::{estimate_sequence, load_disparity_series, save_disparity_series, DisparityConfig, DisparityMap};
use svqa_core::distort::{apply, DistortionSpec};
use svqa_core::fr::{score_fr, FrInputs, FrMetricConfig};
use svqa_core::media::{load_sequence_named, save_map_series, save_sequence, SequenceDescriptor, StereoSequence};
use svqa_core::nr::{score_nr, NrInputs, NrMetricConfig};
use svqa_core::saliency::{baseline_vam, load_external_saliency, SaliencyMap, VamConfig};
use svqa_core::stats::{emit_report, evaluate, screen_and_mos, si_ti, Mapping, PerfRow, SubjectiveTable};
use svqa_core::{MetricId, MetricReport};

use crate::args::*;
use crate::manifest::{manifest_path, RunManifest};

/// Bad invocation; exits with status 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

/// Optional sections of the `--config` JSON.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToolConfig {
    pub fr: FrMetricConfig,
    pub nr: NrMetricConfig,
    pub disparity: DisparityConfig,
    pub vam: VamConfig,
}

fn load_config(path: Option<&Path>, manifest: &mut RunManifest) -> Result<ToolConfig> {
    let Some(path) = path else { return Ok(ToolConfig::default()) };
    manifest.input(path)?;
    manifest.config = Some(path.to_path_buf());
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
}

fn parse_metric(id: &str) -> Result<MetricId> {
    id.parse::<MetricId>().map_err(|e| UsageError(e.to_string()).into())
}

#[derive(Debug)]
enum SaliencyArg {
    None,
    Uniform,
    Baseline,
    Dir(PathBuf),
}

fn parse_saliency(s: &str) -> Result<SaliencyArg> {
    Ok(match s {
        "none" => SaliencyArg::None,
        "uniform" => SaliencyArg::Uniform,
        "baseline" => SaliencyArg::Baseline,
        _ => match s.strip_prefix("dir:") {
            Some(p) if !p.is_empty() => SaliencyArg::Dir(PathBuf::from(p)),
            _ => bail!(UsageError(format!("--saliency must be none, uniform, baseline or dir:<path>, got {s:?}"))),
        },
    })
}

#[derive(Debug)]
enum DisparityArg {
    Estimate,
    Dir(PathBuf),
}

fn parse_disparity(s: &str) -> Result<DisparityArg> {
    match s {
        "estimate" => Ok(DisparityArg::Estimate),
        _ => match s.strip_prefix("dir:") {
            Some(p) if !p.is_empty() => Ok(DisparityArg::Dir(PathBuf::from(p))),
            _ => bail!(UsageError(format!("--disparity must be estimate or dir:<path>, got {s:?}"))),
        },
    }
}

fn load(path: &Path, manifest: &mut RunManifest) -> Result<StereoSequence> {
    let desc = SequenceDescriptor::from_file(path).with_context(|| format!("descriptor {}", path.display()))?;
    manifest.input(path)?;
    manifest.input(&desc.left)?;
    manifest.input(&desc.right)?;
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    load_sequence_named(&desc, &name).with_context(|| format!("loading {}", path.display()))
}

fn disparity_for(
    arg: &DisparityArg,
    seq: &StereoSequence,
    sub: Option<&str>,
    cfg: &DisparityConfig,
) -> Result<Vec<DisparityMap>> {
    Ok(match arg {
        DisparityArg::Estimate => estimate_sequence(seq, cfg)?,
        DisparityArg::Dir(dir) => {
            let dir = sub.map_or(dir.clone(), |s| dir.join(s));
            load_disparity_series(&dir, seq, cfg.search_range).with_context(|| format!("disparity maps in {}", dir.display()))?
        }
    })
}

fn saliency_for(
    arg: &SaliencyArg,
    seq: &StereoSequence,
    disparity: Option<&[DisparityMap]>,
    cfg: &VamConfig,
) -> Result<Option<Vec<SaliencyMap>>> {
    Ok(match arg {
        SaliencyArg::None => None,
        SaliencyArg::Uniform => Some(vec![SaliencyMap::uniform(seq.width(), seq.height()); seq.len()]),
        SaliencyArg::Baseline => Some(baseline_vam(seq, disparity, cfg)?),
        SaliencyArg::Dir(dir) => {
            Some(load_external_saliency(dir, seq).with_context(|| format!("saliency maps in {}", dir.display()))?)
        }
    })
}

fn write_report(report: &MetricReport, out: &Path, manifest: &mut RunManifest) -> Result<()> {
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    report.write_json(out)?;
    let mut csv = out.with_extension("csv");
    if csv == out {
        csv = out.with_extension("frames.csv");
    }
    fs::write(&csv, report.frame_csv()).with_context(|| format!("writing {}", csv.display()))?;
    manifest.outputs.push(out.to_path_buf());
    manifest.outputs.push(csv);
    info!("{} {} = {}", report.metric, report.item.as_deref().unwrap_or(""), report.pooled);
    Ok(())
}

fn finish(manifest: &RunManifest, out: &Path, is_dir: bool) -> Result<()> {
    manifest.write(&manifest_path(out, is_dir))
}

pub fn run(command: &Command, argv: &[String]) -> Result<()> {
    match command {
        Command::ScoreFr(a) => score_fr_cmd(a, argv),
        Command::ScoreNr(a) => score_nr_cmd(a, argv),
        Command::Saliency(a) => saliency_cmd(a, argv),
        Command::Disparity(a) => disparity_cmd(a, argv),
        Command::Distort(a) => distort_cmd(a, argv),
        Command::Evaluate(a) => evaluate_cmd(a, argv),
        Command::Info(a) => info_cmd(a),
        Command::Replay(_) => unreachable!("replay is resolved before dispatch"),
    }
}

fn score_fr_cmd(a: &ScoreFrArgs, argv: &[String]) -> Result<()> {
    let metric = parse_metric(&a.metric)?;
    if !metric.is_full_reference() {
        bail!(UsageError(format!("{metric} is a no-reference metric; use score-nr")));
    }
    let sal = parse_saliency(&a.sources.saliency)?;
    let disp = a.sources.disparity.as_deref().map(parse_disparity).transpose()?;
    let mut manifest = RunManifest::new("score-fr", argv)?;
    let cfg = load_config(a.sources.config.as_deref(), &mut manifest)?;
    let reference = load(&a.reference, &mut manifest)?;
    let distorted = load(&a.dist, &mut manifest)?;

    let disp = disp.or(metric.needs_disparity().then_some(DisparityArg::Estimate));
    let maps = match &disp {
        Some(d) => {
            let sub = |s| matches!(d, DisparityArg::Dir(_)).then_some(s);
            Some((
                disparity_for(d, &reference, sub("ref"), &cfg.disparity)?,
                disparity_for(d, &distorted, sub("dist"), &cfg.disparity)?,
            ))
        }
        None => None,
    };
    let saliency = saliency_for(&sal, &reference, maps.as_ref().map(|m| m.0.as_slice()), &cfg.vam)?;

    let mut inputs = FrInputs::new(&reference, &distorted).with_saliency(saliency.as_deref());
    if let Some((dr, dd)) = &maps {
        inputs = inputs.with_disparity(dr, dd);
    }
    let report = score_fr(metric, &inputs, &cfg.fr)?;

    manifest.saliency = Some(a.sources.saliency.clone());
    manifest.disparity = a.sources.disparity.clone();
    write_report(&report, &a.out, &mut manifest)?;
    finish(&manifest, &a.out, false)
}

fn score_nr_cmd(a: &ScoreNrArgs, argv: &[String]) -> Result<()> {
    let metric = parse_metric(&a.metric)?;
    if metric.is_full_reference() {
        bail!(UsageError(format!("{metric} is a full-reference metric; use score-fr")));
    }
    let sal = parse_saliency(&a.sources.saliency)?;
    let disp = a.sources.disparity.as_deref().map(parse_disparity).transpose()?;
    let mut manifest = RunManifest::new("score-nr", argv)?;
    let cfg = load_config(a.sources.config.as_deref(), &mut manifest)?;
    let distorted = load(&a.dist, &mut manifest)?;

    let disp = disp.or(metric.needs_disparity().then_some(DisparityArg::Estimate));
    let maps = disp.map(|d| disparity_for(&d, &distorted, None, &cfg.disparity)).transpose()?;
    let saliency = saliency_for(&sal, &distorted, maps.as_deref(), &cfg.vam)?;

    let mut inputs = NrInputs::new(&distorted).with_saliency(saliency.as_deref());
    if let Some(d) = &maps {
        inputs = inputs.with_disparity(d);
    }
    let report = score_nr(metric, &inputs, &cfg.nr)?;

    manifest.saliency = Some(a.sources.saliency.clone());
    manifest.disparity = a.sources.disparity.clone();
    write_report(&report, &a.out, &mut manifest)?;
    finish(&manifest, &a.out, false)
}

fn saliency_cmd(a: &SaliencyArgs, argv: &[String]) -> Result<()> {
    let disp = a.disparity.as_deref().map(parse_disparity).transpose()?;
    let mut manifest = RunManifest::new("saliency", argv)?;
    let cfg = load_config(a.config.as_deref(), &mut manifest)?;
    let seq = load(&a.input, &mut manifest)?;
    let maps = disp.map(|d| disparity_for(&d, &seq, None, &cfg.disparity)).transpose()?;
    let sal = baseline_vam(&seq, maps.as_deref(), &cfg.vam)?;
    let planes: Vec<_> = sal.iter().map(|s| s.values().clone()).collect();
    save_map_series(&planes, &a.out)?;
    manifest.saliency = Some("baseline".into());
    manifest.disparity = a.disparity.clone();
    manifest.outputs.push(a.out.clone());
    finish(&manifest, &a.out, true)
}

fn disparity_cmd(a: &DisparityArgs, argv: &[String]) -> Result<()> {
    let mut manifest = RunManifest::new("disparity", argv)?;
    let cfg = load_config(a.config.as_deref(), &mut manifest)?;
    let seq = load(&a.input, &mut manifest)?;
    let maps = estimate_sequence(&seq, &cfg.disparity)?;
    save_disparity_series(&maps, &a.out, cfg.disparity.search_range)?;
    manifest.disparity = Some("estimate".into());
    manifest.outputs.push(a.out.clone());
    finish(&manifest, &a.out, true)
}

fn distort_cmd(a: &DistortArgs, argv: &[String]) -> Result<()> {
    let mut manifest = RunManifest::new("distort", argv)?;
    manifest.input(&a.spec)?;
    let text = fs::read_to_string(&a.spec).with_context(|| format!("reading {}", a.spec.display()))?;
    let spec: DistortionSpec =
        serde_json::from_str(&text).with_context(|| format!("parsing distortion spec {}", a.spec.display()))?;
    spec.validate()?;
    let seq = load(&a.input, &mut manifest)?;
    let out_seq = apply(&seq, &spec)?;

    let source = SequenceDescriptor::from_file(&a.input)?;
    let dir = a.out.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let stem = a.out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "distorted".into());
    let desc = SequenceDescriptor {
        left: dir.join(format!("{stem}_left.yuv")),
        right: dir.join(format!("{stem}_right.yuv")),
        ..source
    };
    save_sequence(&out_seq, &desc)?;
    desc.write_file(&a.out)?;
    manifest.seed = spec.seed;
    manifest.outputs.extend([a.out.clone(), desc.left.clone(), desc.right.clone()]);
    finish(&manifest, &a.out, false)
}

fn evaluate_cmd(a: &EvaluateArgs, argv: &[String]) -> Result<()> {
    let mut manifest = RunManifest::new("evaluate", argv)?;
    manifest.input(&a.scores)?;
    let table = SubjectiveTable::read_csv(&a.scores).with_context(|| format!("scores {}", a.scores.display()))?;
    let mos = screen_and_mos(&table)?;
    if !mos.rejected_subjects.is_empty() {
        info!("rejected subjects: {}", mos.rejected_subjects.join(", "));
    }
    if mos.screening_degenerate {
        warn!("screening rejected everyone; MOS uses all subjects");
    }

    let mut groups: Vec<((MetricId, String), Vec<MetricReport>)> = Vec::new();
    for path in &a.objective {
        manifest.input(path)?;
        let report = MetricReport::read_json(path).with_context(|| format!("report {}", path.display()))?;
        let key = (report.metric, report.saliency_mode.clone());
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(report),
            None => groups.push((key, vec![report])),
        }
    }

    let mapping = match a.mapping {
        MappingArg::Raw => Mapping::Raw,
        MappingArg::Logistic => Mapping::Logistic,
    };
    let mut rows = Vec::new();
    for ((metric, mode), reports) in &groups {
        let (mut obj, mut m, mut s) = (Vec::new(), Vec::new(), Vec::new());
        let mut seen = Vec::new();
        for r in reports {
            let item = r.item.as_deref().context("report has no item id")?;
            if seen.contains(&item) {
                bail!("{metric} ({mode}) has two reports for item {item}");
            }
            seen.push(item);
            let i = mos.index_of(item).with_context(|| format!("item {item} has no subjective scores"))?;
            obj.push(r.pooled);
            m.push(mos.mos[i]);
            s.push(mos.std[i]);
        }
        let perf = evaluate(&obj, &m, &s, mapping).with_context(|| format!("evaluating {metric} ({mode})"))?;
        if perf.logistic.as_ref().is_some_and(|f| !f.converged) {
            warn!("{metric} ({mode}): logistic fit did not converge; raw scores used");
        }
        rows.push(PerfRow {
            metric: metric.to_string(),
            saliency_mode: mode.clone(),
            distortion: a.distortion.clone(),
            perf,
        });
    }
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    emit_report(&rows, &a.out)?;
    manifest.outputs.push(a.out.clone());
    finish(&manifest, &a.out, false)
}

fn info_cmd(a: &InfoArgs) -> Result<()> {
    let desc = SequenceDescriptor::from_file(&a.input)?;
    let mut scratch = RunManifest::new("info", &[])?;
    let seq = load(&a.input, &mut scratch)?;
    let c = si_ti(&seq)?;
    println!("name: {}", seq.name());
    println!("dims: {}x{}", seq.width(), seq.height());
    println!("frames: {}", seq.len());
    println!("fps: {}", seq.fps());
    println!("format: {}", serde_json::to_value(desc.format)?.as_str().unwrap_or("?"));
    println!("si: {:.4}", c.si);
    if c.ti_defined {
        println!("ti: {:.4}", c.ti);
    } else {
        println!("ti: undefined (single frame)");
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn source_flags() {
        assert!(matches!(parse_saliency("dir:maps").unwrap(), SaliencyArg::Dir(p) if p == Path::new("maps")));
        assert!(matches!(parse_saliency("uniform").unwrap(), SaliencyArg::Uniform));
        let err = parse_saliency("dir:").unwrap_err();
        assert!(err.downcast_ref::<UsageError>().is_some());
        assert!(matches!(parse_disparity("estimate").unwrap(), DisparityArg::Estimate));
        assert!(parse_disparity("guess").unwrap_err().downcast_ref::<UsageError>().is_some());
    }

    #[test]
    fn config_sections_default_and_reject_unknown_keys() {
        let c: ToolConfig = serde_json::from_str(r#"{"fr":{"psnr_cap":60}}"#).unwrap();
        assert_eq!(c.fr.psnr_cap, 60.0);
        assert_eq!(c.disparity, DisparityConfig::default());
        assert!(serde_json::from_str::<ToolConfig>(r#"{"frr":{}}"#).is_err());
    }
}
