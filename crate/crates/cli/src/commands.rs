use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use truthlens::argument::{build_tree, render_text, PredictionStyle, TreeDocument};
use truthlens::dataset::{load_dataset, load_stats, Dataset, MarkedEvaluation};
use truthlens::explainers::{self, SurrogateConfig};
use truthlens::meta::{self, CandidateMap, MetaExplanation};
use truthlens::metrics::complexity;
use truthlens::models::{ModelSource, ModelSpec};
use truthlens::{Error, EvaluationReport, Explanation, FeatureStats, Instance, ProbeSet};

use crate::args::*;
use crate::output::{emit, to_json, CliError, CliResult, Document};

pub fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Stats(a) => stats(a),
        Command::Explain(a) => explain(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Meta(a) => meta_cmd(a),
        Command::Argue(a) => argue(a),
        Command::Compare(a) => compare(a),
    }
}

fn schema_error(
    path: &Path,
    line: Option<usize>,
    field: Option<String>,
    message: impl Into<String>,
) -> CliError {
    CliError::Core(Error::Schema {
        path: path.to_owned(),
        line,
        field,
        message: message.into(),
    })
}

fn display(path: &Path) -> String {
    path.display().to_string()
}

/// Maps `f` over `items` on `jobs` threads; results and the reported error
/// follow input order.
fn par_map<T, R, F>(jobs: usize, items: &[T], f: F) -> CliResult<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> CliResult<R> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {jobs} worker threads: {e}")))?;
    let results: Vec<CliResult<R>> = pool.install(|| items.par_iter().map(&f).collect());
    results.into_iter().collect()
}

fn resolve_stats(dataset: &Dataset, path: Option<&Path>) -> CliResult<FeatureStats> {
    let stats = match path {
        Some(path) => load_stats(path)?,
        None => dataset.feature_stats()?,
    };
    let raw_dim = dataset.instances[0].map().raw_dim();
    if stats.raw_dim() != raw_dim {
        let path = path.map_or_else(|| PathBuf::from(&dataset.source), Path::to_owned);
        return Err(schema_error(
            &path,
            None,
            Some("features".into()),
            format!(
                "statistics cover {} raw values, the data has {raw_dim}",
                stats.raw_dim()
            ),
        ));
    }
    Ok(stats)
}

struct Loaded {
    path: PathBuf,
    position: usize,
    explanation: Explanation,
}

fn load_all(paths: &[PathBuf]) -> CliResult<Vec<Loaded>> {
    let mut loaded = Vec::new();
    for path in paths {
        for (position, explanation) in explainers::load_explanations(path)?.into_iter().enumerate()
        {
            loaded.push(Loaded {
                path: path.clone(),
                position,
                explanation,
            });
        }
    }
    Ok(loaded)
}

/// Explanations of one instance, as indices into the loaded list.
struct Group<'a> {
    instance: &'a Instance,
    members: Vec<usize>,
}

fn group_by_instance<'a>(dataset: &'a Dataset, loaded: &[Loaded]) -> CliResult<Vec<Group<'a>>> {
    let index: HashMap<&str, usize> = dataset
        .instances
        .iter()
        .enumerate()
        .map(|(i, x)| (x.id(), i))
        .collect();
    let mut groups: Vec<Group<'a>> = Vec::new();
    let mut slots: HashMap<usize, usize> = HashMap::new();
    for (k, item) in loaded.iter().enumerate() {
        let id = item.explanation.instance_id.as_str();
        let field = |name: &str| Some(format!("explanations[{}].{name}", item.position));
        let &i = index.get(id).ok_or_else(|| {
            schema_error(
                &item.path,
                None,
                field("instance_id"),
                format!("instance `{id}` is not in {}", dataset.source),
            )
        })?;
        let instance = &dataset.instances[i];
        explainers::check_against(&item.explanation, instance)
            .map_err(|e| schema_error(&item.path, None, field("scores"), e.to_string()))?;
        let slot = *slots.entry(i).or_insert_with(|| {
            groups.push(Group {
                instance,
                members: Vec::new(),
            });
            groups.len() - 1
        });
        groups[slot].members.push(k);
    }
    Ok(groups)
}

fn explanation_paths(paths: &[PathBuf]) -> Vec<String> {
    paths.iter().map(|p| display(p)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplainerSummary {
    pub explainer: String,
    pub instances: usize,
    pub untruthful_total: usize,
    pub mean_truthfulness: f64,
}

fn summarize<'a>(reports: impl IntoIterator<Item = &'a EvaluationReport>) -> Vec<ExplainerSummary> {
    let mut out: Vec<(ExplainerSummary, f64)> = Vec::new();
    for r in reports {
        let pos = match out.iter().position(|(s, _)| s.explainer == r.explainer) {
            Some(pos) => pos,
            None => {
                out.push((
                    ExplainerSummary {
                        explainer: r.explainer.clone(),
                        instances: 0,
                        untruthful_total: 0,
                        mean_truthfulness: 0.0,
                    },
                    0.0,
                ));
                out.len() - 1
            }
        };
        let (summary, total) = &mut out[pos];
        summary.instances += 1;
        summary.untruthful_total += r.untruthful_count;
        *total += r.truthfulness;
    }
    out.into_iter()
        .map(|(mut s, total)| {
            s.mean_truthfulness = total / s.instances as f64;
            s
        })
        .collect()
}

fn stats(a: &StatsArgs) -> CliResult<()> {
    let dataset = load_dataset(&a.data)?;
    let stats = dataset.feature_stats()?;
    let doc = Document::new(
        "stats",
        json!({ "data": display(&a.data) }),
        json!({ "stats": stats }),
    );
    emit(a.output.out.as_deref(), &to_json(&doc)?, None)
}

fn explain(a: &ExplainArgs) -> CliResult<()> {
    let dataset = load_dataset(&a.data.data)?;
    let mut config = json!({
        "data": display(&a.data.data),
        "seed": a.seed,
    });
    let explanations: Vec<Explanation> = match a.method {
        Method::Random => {
            config["method"] = json!(explainers::RANDOM_NAME);
            dataset
                .instances
                .iter()
                .map(|x| explainers::random_explain(x.map().len(), a.seed, x.id()))
                .collect()
        }
        Method::ExactLinear => {
            config["method"] = json!(explainers::EXACT_LINEAR_NAME);
            let path = match &a.model {
                Some(ModelSource::Builtin(path)) => path,
                _ => {
                    return Err(CliError::Usage(
                        "exact-linear needs --model builtin:<linear spec>".into(),
                    ))
                }
            };
            config["model"] = json!(format!("builtin:{}", display(path)));
            let ModelSpec::Linear(model) = ModelSpec::load(path)? else {
                return Err(schema_error(
                    path,
                    None,
                    Some("type".into()),
                    "exact-linear needs a linear model",
                ));
            };
            dataset
                .instances
                .iter()
                .map(|x| explainers::exact_linear_explain(&model, x.map(), x.id()))
                .collect::<truthlens::Result<_>>()?
        }
        Method::Surrogate => {
            let source = a
                .model
                .as_ref()
                .ok_or_else(|| CliError::Usage("surrogate needs --model".into()))?;
            let stats = resolve_stats(&dataset, a.data.stats.as_deref())?;
            let surrogate = SurrogateConfig {
                n_samples: a.samples,
                kernel_width: a.kernel_width,
                ridge: a.ridge,
                seed: a.seed,
            };
            config["method"] = json!(explainers::SURROGATE_NAME);
            config["model"] = json!(source.to_string());
            config["stats"] = json!(stats.source);
            config["samples"] = json!(a.samples);
            config["kernel_width"] = json!(a.kernel_width);
            config["ridge"] = json!(a.ridge);
            let model = source.open(a.retries)?;
            par_map(a.parallel.jobs, &dataset.instances, |x| {
                Ok(explainers::surrogate_explain(
                    model.as_ref(),
                    x,
                    &stats,
                    &surrogate,
                )?)
            })?
        }
    };
    let doc = Document::new("explain", config, json!({ "explanations": explanations }));
    emit(a.output.out.as_deref(), &to_json(&doc)?, None)
}

fn evaluate(a: &EvaluateArgs) -> CliResult<()> {
    let config = a.eval.config();
    config.validate()?;
    let dataset = load_dataset(&a.data.data)?;
    let stats = resolve_stats(&dataset, a.data.stats.as_deref())?;
    let loaded = load_all(&a.explanations)?;
    let groups = group_by_instance(&dataset, &loaded)?;
    let model = a.model.model.open(a.model.retries)?;

    let per_group = par_map(a.parallel.jobs, &groups, |g| {
        let probes = ProbeSet::run(g.instance, model.as_ref(), &stats, &config)?;
        g.members
            .iter()
            .map(|&k| Ok((k, probes.evaluate(&loaded[k].explanation)?)))
            .collect::<CliResult<Vec<_>>>()
    })?;
    let mut slots: Vec<Option<EvaluationReport>> = vec![None; loaded.len()];
    for (k, report) in per_group.into_iter().flatten() {
        slots[k] = Some(report);
    }
    let reports: Vec<EvaluationReport> = slots
        .into_iter()
        .map(|r| r.expect("every explanation belongs to a group"))
        .collect();

    let doc = Document::new(
        "evaluate",
        json!({
            "model": a.model.model.to_string(),
            "retries": a.model.retries,
            "data": display(&a.data.data),
            "stats": stats.source,
            "explanations": explanation_paths(&a.explanations),
            "evaluation": config,
        }),
        json!({
            "summary": summarize(&reports),
            "reports": reports,
        }),
    );
    emit(a.output.out.as_deref(), &to_json(&doc)?, None)
}

fn strategy_name(strategy: Strategy) -> &'static str {
    match strategy {
        Strategy::Truthful => meta::TRUTHFUL_META_NAME,
        Strategy::Mean => "mean",
        Strategy::Median => "median",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedCount {
    pub explainer: String,
    pub untruthful: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaOutcome {
    pub instance_id: String,
    pub seeds: Vec<SeedCount>,
    pub meta_untruthful: usize,
}

fn meta_cmd(a: &MetaArgs) -> CliResult<()> {
    if let Some(path) = &a.marked {
        let marked = MarkedEvaluation::load(path)?;
        let explanations = marked.to_explanations();
        let result = match a.strategy {
            Strategy::Truthful => {
                let candidates = CandidateMap::from_marks(&explanations, &marked.marks())?;
                json!(meta::truthful_meta_explanation(
                    &candidates,
                    &marked.average_change,
                    marked.instance_id.clone()
                )?)
            }
            Strategy::Mean => json!(meta::aggregate_mean(&explanations)?),
            Strategy::Median => json!(meta::aggregate_median(&explanations)?),
        };
        let doc = Document::new(
            "meta",
            json!({
                "strategy": strategy_name(a.strategy),
                "marked": display(path),
            }),
            json!({ "explanations": [result] }),
        );
        return emit(a.output.out.as_deref(), &to_json(&doc)?, None);
    }

    if a.explanations.is_empty() {
        return Err(CliError::Usage(
            "meta needs --explanations or --marked".into(),
        ));
    }
    let loaded = load_all(&a.explanations)?;
    let mut config = json!({
        "strategy": strategy_name(a.strategy),
        "explanations": explanation_paths(&a.explanations),
    });

    let payload = match a.strategy {
        Strategy::Mean | Strategy::Median => {
            let mut order: Vec<&str> = Vec::new();
            let mut by_instance: HashMap<&str, Vec<Explanation>> = HashMap::new();
            for item in &loaded {
                let id = item.explanation.instance_id.as_str();
                by_instance
                    .entry(id)
                    .or_insert_with(|| {
                        order.push(id);
                        Vec::new()
                    })
                    .push(item.explanation.clone());
            }
            let combined = order
                .iter()
                .map(|id| {
                    let group = &by_instance[id];
                    if a.strategy == Strategy::Mean {
                        meta::aggregate_mean(group)
                    } else {
                        meta::aggregate_median(group)
                    }
                })
                .collect::<truthlens::Result<Vec<_>>>()?;
            json!({ "explanations": combined })
        }
        Strategy::Truthful => {
            let (Some(source), Some(data)) = (&a.model, &a.data) else {
                return Err(CliError::Usage(
                    "the truthful strategy needs --model and --data, or --marked".into(),
                ));
            };
            let eval = a.eval.config();
            eval.validate()?;
            let dataset = load_dataset(data)?;
            let stats = resolve_stats(&dataset, a.stats.as_deref())?;
            let groups = group_by_instance(&dataset, &loaded)?;
            let model = source.open(a.retries)?;
            config["model"] = json!(source.to_string());
            config["retries"] = json!(a.retries);
            config["data"] = json!(display(data));
            config["stats"] = json!(stats.source);
            config["evaluation"] = json!(eval);

            let results = par_map(a.parallel.jobs, &groups, |g| {
                let probes = ProbeSet::run(g.instance, model.as_ref(), &stats, &eval)?;
                let explanations: Vec<Explanation> = g
                    .members
                    .iter()
                    .map(|&k| loaded[k].explanation.clone())
                    .collect();
                let reports = explanations
                    .iter()
                    .map(|e| probes.evaluate(e))
                    .collect::<truthlens::Result<Vec<_>>>()?;
                let candidates = meta::candidate_truthful_scores(&reports, &explanations)?;
                let combined = meta::truthful_meta_explanation(
                    &candidates,
                    &probes.average_changes(),
                    g.instance.id(),
                )?;
                let meta_report = probes.evaluate(&combined.explanation)?;
                let outcome = MetaOutcome {
                    instance_id: g.instance.id().to_owned(),
                    seeds: reports
                        .iter()
                        .map(|r| SeedCount {
                            explainer: r.explainer.clone(),
                            untruthful: r.untruthful_count,
                        })
                        .collect(),
                    meta_untruthful: meta_report.untruthful_count,
                };
                Ok((combined, outcome))
            })?;
            let (combined, outcomes): (Vec<MetaExplanation>, Vec<MetaOutcome>) =
                results.into_iter().unzip();
            json!({ "explanations": combined, "instances": outcomes })
        }
    };
    let doc = Document::new("meta", config, payload);
    emit(a.output.out.as_deref(), &to_json(&doc)?, None)
}

/// Reads an `evaluate` document, a bare report, or an array of reports.
pub fn load_reports(path: &Path) -> CliResult<Vec<EvaluationReport>> {
    let text = std::fs::read_to_string(path).map_err(|source| {
        CliError::Core(Error::Io {
            path: path.to_owned(),
            source,
        })
    })?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| schema_error(path, Some(e.line()), None, e.to_string()))?;
    let (body, field) = match value.get("reports") {
        Some(reports) => (reports.clone(), "reports"),
        None => (value, "report"),
    };
    let reports = if body.is_array() {
        serde_json::from_value::<Vec<EvaluationReport>>(body)
    } else {
        serde_json::from_value::<EvaluationReport>(body).map(|r| vec![r])
    }
    .map_err(|e| schema_error(path, None, Some(field.into()), e.to_string()))?;
    if reports.is_empty() {
        return Err(schema_error(path, None, Some(field.into()), "no reports"));
    }
    Ok(reports)
}

fn argue(a: &ArgueArgs) -> CliResult<()> {
    let reports = load_reports(&a.report)?;
    let (style, style_name) = match a.style {
        Style::Percent => (PredictionStyle::Percent, "percent"),
        Style::Raw => (PredictionStyle::Raw, "raw"),
    };
    let mut trees = Vec::with_capacity(reports.len());
    let mut summary = String::new();
    for report in &reports {
        let tree = build_tree(report);
        let _ = writeln!(
            summary,
            "== {} / {}: truthfulness {} ({} untruthful of {}) ==",
            report.instance_id,
            report.explainer,
            report.truthfulness,
            report.untruthful_count,
            report.verdicts.len()
        );
        summary.push_str(&render_text(&tree, style));
        summary.push('\n');
        trees.push(TreeDocument::new(report, &tree, style));
    }
    let doc = Document::new(
        "argue",
        json!({ "report": display(&a.report), "style": style_name }),
        json!({ "trees": trees }),
    );
    emit(
        a.output.out.as_deref(),
        &to_json(&doc)?,
        Some((&summary, a.summary.as_deref())),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub explainer: String,
    pub noise_level: truthlens::NoiseLevel,
    pub delta: f64,
    pub complexity_threshold: f64,
    pub evaluations: usize,
    pub untruthful_total: usize,
    pub mean_truthfulness: f64,
    pub mean_complexity: f64,
}

struct Score {
    explainer: String,
    untruthful: usize,
    truthfulness: f64,
    complexity: usize,
}

fn score(report: &EvaluationReport, explanation: &Explanation, threshold: f64) -> CliResult<Score> {
    Ok(Score {
        explainer: report.explainer.clone(),
        untruthful: report.untruthful_count,
        truthfulness: report.truthfulness,
        complexity: complexity(explanation, threshold)?,
    })
}

fn compare(a: &CompareArgs) -> CliResult<()> {
    if a.deltas.is_empty() || a.noise_levels.is_empty() {
        return Err(CliError::Usage(
            "compare needs at least one delta and one noise level".into(),
        ));
    }
    let dataset = load_dataset(&a.data.data)?;
    let stats = resolve_stats(&dataset, a.data.stats.as_deref())?;
    let loaded = load_all(&a.explanations)?;
    let groups = group_by_instance(&dataset, &loaded)?;
    let model = a.model.model.open(a.model.retries)?;

    let mut rows: Vec<CompareRow> = Vec::new();
    for &noise_level in &a.noise_levels {
        for &delta in &a.deltas {
            let config = a.probe.config(noise_level, delta);
            config.validate()?;
            let threshold = a.complexity_threshold.unwrap_or(delta);
            let per_group = par_map(a.parallel.jobs, &groups, |g| {
                let probes = ProbeSet::run(g.instance, model.as_ref(), &stats, &config)?;
                let explanations: Vec<Explanation> = g
                    .members
                    .iter()
                    .map(|&k| loaded[k].explanation.clone())
                    .collect();
                let reports = explanations
                    .iter()
                    .map(|e| probes.evaluate(e))
                    .collect::<truthlens::Result<Vec<_>>>()?;
                let mut scores = reports
                    .iter()
                    .zip(&explanations)
                    .map(|(r, e)| score(r, e, threshold))
                    .collect::<CliResult<Vec<_>>>()?;
                if a.ensembles {
                    let candidates = meta::candidate_truthful_scores(&reports, &explanations)?;
                    let combined = meta::truthful_meta_explanation(
                        &candidates,
                        &probes.average_changes(),
                        g.instance.id(),
                    )?
                    .explanation;
                    for e in [
                        combined,
                        meta::aggregate_mean(&explanations)?,
                        meta::aggregate_median(&explanations)?,
                    ] {
                        scores.push(score(&probes.evaluate(&e)?, &e, threshold)?);
                    }
                }
                Ok(scores)
            })?;

            let first_row = rows.len();
            let mut totals: Vec<(f64, usize)> = Vec::new();
            for s in per_group.into_iter().flatten() {
                let pos = match rows[first_row..]
                    .iter()
                    .position(|r| r.explainer == s.explainer)
                {
                    Some(pos) => pos,
                    None => {
                        rows.push(CompareRow {
                            explainer: s.explainer.clone(),
                            noise_level,
                            delta,
                            complexity_threshold: threshold,
                            evaluations: 0,
                            untruthful_total: 0,
                            mean_truthfulness: 0.0,
                            mean_complexity: 0.0,
                        });
                        totals.push((0.0, 0));
                        totals.len() - 1
                    }
                };
                let row = &mut rows[first_row + pos];
                row.evaluations += 1;
                row.untruthful_total += s.untruthful;
                totals[pos].0 += s.truthfulness;
                totals[pos].1 += s.complexity;
            }
            for (row, (truth, complexity)) in rows[first_row..].iter_mut().zip(totals) {
                row.mean_truthfulness = truth / row.evaluations as f64;
                row.mean_complexity = complexity as f64 / row.evaluations as f64;
            }
        }
    }

    let doc = Document::new(
        "compare",
        json!({
            "model": a.model.model.to_string(),
            "retries": a.model.retries,
            "data": display(&a.data.data),
            "stats": stats.source,
            "explanations": explanation_paths(&a.explanations),
            "deltas": a.deltas,
            "noise_levels": a.noise_levels.iter().map(|n| n.to_string()).collect::<Vec<_>>(),
            "ensembles": a.ensembles,
            "complexity_threshold": a.complexity_threshold,
            "seed": a.probe.seed,
            "clamp_images": !a.probe.no_clamp_images,
            "clamp_timeseries": a.probe.clamp_timeseries,
        }),
        json!({ "rows": rows }),
    );
    emit(
        a.output.out.as_deref(),
        &to_json(&doc)?,
        Some((&compare_table(&rows), a.summary.as_deref())),
    )
}

fn compare_table(rows: &[CompareRow]) -> String {
    let width = rows
        .iter()
        .map(|r| r.explainer.len())
        .max()
        .unwrap_or(0)
        .max("explainer".len());
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<width$}  {:<6}  {:>8}  {:>5}  {:>10}  {:>12}  {:>10}",
        "explainer", "noise", "delta", "n", "untruthful", "truthfulness", "complexity"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:<width$}  {:<6}  {:>8}  {:>5}  {:>10}  {:>12.4}  {:>10.2}",
            r.explainer,
            r.noise_level.to_string(),
            r.delta,
            r.evaluations,
            r.untruthful_total,
            r.mean_truthfulness,
            r.mean_complexity
        );
    }
    out
}
