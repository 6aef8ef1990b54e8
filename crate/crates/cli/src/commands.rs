use std::fs;
use std::path::{Path, PathBuf};

use rfm_pyramid::data_model::{
    aggregate_to_rfm, parse_rfm, parse_survey, parse_transactions, write_rfm, write_survey,
    write_transactions, Parsed, RfmRecord, SurveyResponse, TransactionSchema, LIKERT_ITEMS,
};
use rfm_pyramid::pyramid::{kmeans_fit, summarize, Point, PyramidClass};
use rfm_pyramid::rfm_engine::{
    derive_customer_quintiles, parse_scored, score_cohort, write_scored, RfmCode, ScoringRuleSet,
};
use rfm_pyramid::stats::{
    binomial_validity_test, cronbach_alpha_survey, krejcie_morgan_min_sample, mann_whitney_u,
    t_test_independent, two_proportion_z, ValidityItem,
};
use rfm_pyramid::svg::render_pyramid_svg;
use rfm_pyramid::synth::{
    centroid_shaped, gen_survey, materialize_records, materialize_transactions, plant_clusters,
    PlantedSpec, AUTOMOTIVE_CENTROIDS, COMPUTER_CENTROIDS,
};
use rfm_pyramid::Error;

use crate::cli::{
    CohortInput, CompareArgs, Hypothesis, IngestArgs, Preset, PyramidArgs, ScoreArgs, SynthArgs,
    SynthKind, ValidateArgs,
};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::provenance::{sha256_hex, Provenance};
use crate::reports::{
    to_json, ComparisonFile, Decision, IngestFile, PyramidFile, Section, ValidityFile,
};

/// What a command left behind, for the summary printed on stdout.
#[derive(Debug, Default)]
pub struct Outcome {
    pub written: Vec<PathBuf>,
    pub notes: Vec<String>,
}

impl Outcome {
    fn write(&mut self, dir: &Path, name: &str, bytes: &[u8]) -> CliResult<()> {
        let path = dir.join(name);
        fs::write(&path, bytes)
            .map_err(|e| CliError::validation(format!("cannot write {}: {e}", path.display())))?;
        self.written.push(path);
        Ok(())
    }
}

fn read_input(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| CliError::validation(format!("cannot read {}: {e}", path.display())))
}

fn out_dir(cfg: &RunConfig) -> CliResult<&Path> {
    fs::create_dir_all(&cfg.out)
        .map_err(|e| CliError::validation(format!("cannot create {}: {e}", cfg.out.display())))?;
    Ok(&cfg.out)
}

/// In strict mode any bad row is fatal; otherwise it is reported and skipped.
fn accept<T>(
    parsed: Parsed<T>,
    path: &Path,
    strict: bool,
    warnings: &mut Vec<String>,
) -> CliResult<Vec<T>> {
    if strict {
        return Ok(parsed.into_strict()?);
    }
    let name = path.display();
    for e in &parsed.errors {
        let msg = format!("{name}: {e}");
        eprintln!("warning: {msg}");
        warnings.push(msg);
    }
    Ok(parsed.rows)
}

fn load_rules(cfg: &RunConfig, prov: &mut Provenance) -> CliResult<ScoringRuleSet> {
    let rules = match &cfg.rules {
        Some(path) => {
            let bytes = read_input(path)?;
            prov.input("rules", path, &bytes);
            ScoringRuleSet::from_json(bytes.as_slice())?
        }
        None => ScoringRuleSet::expert_default(),
    };
    prov.rules_sha256 = Some(sha256_hex(rules.to_json_pretty().as_bytes()));
    Ok(rules)
}

fn load_records(
    path: &Path,
    from_transactions: bool,
    role: &str,
    cfg: &RunConfig,
    prov: &mut Provenance,
    warnings: &mut Vec<String>,
) -> CliResult<Vec<RfmRecord>> {
    let bytes = read_input(path)?;
    prov.input(role, path, &bytes);
    if from_transactions {
        let date = cfg.analysis_date.ok_or_else(|| {
            CliError::validation("--analysis-date is required with a transaction log")
        })?;
        let parsed = parse_transactions(bytes.as_slice(), &TransactionSchema::default())?;
        let events = accept(parsed, path, cfg.strict, warnings)?;
        Ok(aggregate_to_rfm(&events, date)?)
    } else {
        let parsed = parse_rfm(bytes.as_slice())?;
        accept(parsed, path, cfg.strict, warnings)
    }
}

fn load_codes(
    input: &CohortInput,
    quintiles: bool,
    cfg: &RunConfig,
    prov: &mut Provenance,
    warnings: &mut Vec<String>,
) -> CliResult<(Vec<RfmCode>, Option<ScoringRuleSet>)> {
    if let Some(path) = &input.scored {
        if quintiles {
            return Err(CliError::validation(
                "--quintiles needs raw values, not a scored file",
            ));
        }
        let bytes = read_input(path)?;
        prov.input("scored", path, &bytes);
        let parsed = parse_scored(bytes.as_slice())?;
        return Ok((accept(parsed, path, cfg.strict, warnings)?, None));
    }
    let records = match (&input.transactions, &input.rfm) {
        (Some(p), _) => load_records(p, true, "transactions", cfg, prov, warnings)?,
        (None, Some(p)) => load_records(p, false, "rfm", cfg, prov, warnings)?,
        (None, None) => {
            return Err(CliError::validation(
                "one of --transactions, --rfm or --scored is required",
            ))
        }
    };
    let rules = if quintiles {
        let q = derive_customer_quintiles(&records)?;
        for w in &q.warnings {
            eprintln!("warning: {w}");
            warnings.push(w.clone());
        }
        prov.rules_sha256 = Some(sha256_hex(q.rules.to_json_pretty().as_bytes()));
        q.rules
    } else {
        load_rules(cfg, prov)?
    };
    Ok((score_cohort(&records, &rules), Some(rules)))
}

pub fn ingest(args: &IngestArgs, cfg: &RunConfig) -> CliResult<Outcome> {
    let mut prov = Provenance::new();
    let mut warnings = Vec::new();
    let bytes = read_input(&args.transactions)?;
    prov.input("transactions", &args.transactions, &bytes);
    let date = cfg
        .analysis_date
        .ok_or_else(|| CliError::validation("--analysis-date is required"))?;
    let parsed = parse_transactions(bytes.as_slice(), &TransactionSchema::default())?;
    let events = accept(parsed, &args.transactions, cfg.strict, &mut warnings)?;
    let records = aggregate_to_rfm(&events, date)?;

    let survey = match &args.survey {
        Some(path) => {
            let bytes = read_input(path)?;
            prov.input("survey", path, &bytes);
            let parsed = parse_survey(bytes.as_slice())?;
            Some(accept(parsed, path, cfg.strict, &mut warnings)?)
        }
        None => None,
    };
    let required = args.population.map(krejcie_morgan_min_sample);
    let adequate = match (&survey, required) {
        (Some(s), Some(req)) => Some(s.len() as u64 >= req),
        _ => None,
    };

    let dir = out_dir(cfg)?;
    let mut out = Outcome::default();
    let mut csv = Vec::new();
    write_rfm(&records, &mut csv)?;
    out.write(dir, "rfm.csv", &csv)?;
    let report = IngestFile {
        events: events.len(),
        customers: records.len(),
        survey_responses: survey.as_ref().map(Vec::len),
        population: args.population,
        required_sample: required,
        sample_adequate: adequate,
        row_errors: warnings,
        provenance: prov,
    };
    out.write(dir, "ingest.json", to_json(&report).as_bytes())?;
    out.notes.push(format!(
        "{} events from {} customers",
        report.events, report.customers
    ));
    if let (Some(req), Some(ok)) = (required, adequate) {
        out.notes.push(format!(
            "survey sample {} against a required {req}: {}",
            report.survey_responses.unwrap_or(0),
            if ok { "adequate" } else { "too small" }
        ));
    }
    Ok(out)
}

pub fn score(args: &ScoreArgs, cfg: &RunConfig) -> CliResult<Outcome> {
    if args.input.scored.is_some() {
        return Err(CliError::validation("score needs --transactions or --rfm"));
    }
    let mut prov = Provenance::new();
    let mut warnings = Vec::new();
    let (codes, rules) = load_codes(&args.input, args.quintiles, cfg, &mut prov, &mut warnings)?;
    let dir = out_dir(cfg)?;
    let mut out = Outcome::default();
    let mut csv = Vec::new();
    write_scored(&codes, &mut csv)?;
    out.write(dir, "scored.csv", &csv)?;
    if let Some(rules) = rules {
        out.write(
            dir,
            "rules.json",
            (rules.to_json_pretty() + "\n").as_bytes(),
        )?;
    }
    out.notes.push(format!("{} customers scored", codes.len()));
    Ok(out)
}

pub fn pyramid(args: &PyramidArgs, cfg: &RunConfig) -> CliResult<Outcome> {
    let mut prov = Provenance::new();
    let mut warnings = Vec::new();
    let (codes, _) = load_codes(&args.input, args.quintiles, cfg, &mut prov, &mut warnings)?;
    if codes.is_empty() {
        return Err(CliError::validation("no records"));
    }
    let mut kcfg = cfg.kmeans.clone();
    if let Some(r) = args.restarts {
        kcfg.restarts = r;
    }
    if let Some(m) = args.max_iterations {
        kcfg.max_iterations = m;
    }
    if let Some(t) = args.tolerance {
        kcfg.tolerance = t;
    }
    kcfg.validate()?;
    prov.seed = Some(kcfg.seed);

    let points: Vec<Point> = codes.iter().map(RfmCode::point).collect();
    let ids: Vec<String> = codes.iter().map(|c| c.customer_id.clone()).collect();
    let fit = kmeans_fit(&points, &kcfg)?;
    let report = summarize(&args.cohort, &ids, &fit)?;

    let dir = out_dir(cfg)?;
    let mut out = Outcome::default();
    let file = PyramidFile::new(&report, &fit, &kcfg, prov);
    out.write(dir, "pyramid.json", to_json(&file).as_bytes())?;
    out.write(dir, "pyramid.svg", render_pyramid_svg(&report).as_bytes())?;

    let mut class_of = vec![PyramidClass::Lead; report.clusters.len()];
    for c in &report.clusters {
        class_of[c.cluster_index] = c.class_label;
    }
    let mut assign = String::from("customer_id,cluster_index,class\n");
    for (id, &k) in ids.iter().zip(&fit.assignments) {
        assign.push_str(&format!("{id},{k},{}\n", class_of[k]));
    }
    out.write(dir, "assignments.csv", assign.as_bytes())?;

    if args.input.scored.is_none() {
        let mut csv = Vec::new();
        write_scored(&codes, &mut csv)?;
        out.write(dir, "scored.csv", &csv)?;
    }
    for c in &file.classes {
        out.notes.push(format!(
            "{:<8} {:>6} customers  {:>6.2}%  rfm sum {:.5}",
            c.class.to_string(),
            c.count,
            c.percent,
            c.rfm_sum
        ));
    }
    out.notes.push(format!(
        "success group X = {} of N = {} ({:.4})",
        file.x, file.n, file.success_proportion
    ));
    Ok(out)
}

pub fn validate_survey(args: &ValidateArgs, cfg: &RunConfig) -> CliResult<Outcome> {
    let mut prov = Provenance::new();
    let mut warnings = Vec::new();
    let bytes = read_input(&args.experts)?;
    prov.input("experts", &args.experts, &bytes);
    let parsed = parse_survey(bytes.as_slice())?;
    let responses = accept(parsed, &args.experts, cfg.strict, &mut warnings)?;
    if responses.is_empty() {
        return Err(CliError::validation("no records"));
    }
    if !(1..=5).contains(&args.cut_point) {
        return Err(CliError::validation("--cut-point must lie in 1..=5"));
    }

    let items: Vec<ValidityItem> = (0..LIKERT_ITEMS)
        .map(|i| ValidityItem {
            label: format!("q{}", i + 1),
            responses: responses.iter().map(|r| r.items[i]).collect(),
        })
        .collect();
    let results = binomial_validity_test(&items, args.cut_point, cfg.significance)?;
    let (alpha, alpha_error) = match cronbach_alpha_survey(&responses) {
        Ok(a) => (Some(a), None),
        Err(e @ (Error::DegenerateResponses(_) | Error::EmptySample(_))) => {
            (None, Some(e.to_string()))
        }
        Err(e) => return Err(e.into()),
    };
    let report = ValidityFile {
        cut_point: args.cut_point,
        significance: cfg.significance,
        experts: responses.len(),
        all_confirmed: results.iter().all(|r| r.confirmed),
        items: results,
        reliable: alpha.as_ref().is_some_and(|a| a.reliable),
        alpha,
        alpha_error,
        provenance: prov,
    };
    let dir = out_dir(cfg)?;
    let mut out = Outcome::default();
    out.write(dir, "validity.json", to_json(&report).as_bytes())?;
    for r in &report.items {
        out.notes.push(format!(
            "{}: {}/{} above cut, p = {:.4e}, {}",
            r.item_label,
            r.count_above_cut,
            r.n,
            r.exact_p_two_tailed,
            if r.confirmed {
                "confirmed"
            } else {
                "not confirmed"
            }
        ));
    }
    match (&report.alpha, &report.alpha_error) {
        (Some(a), _) => out.notes.push(format!("cronbach alpha {:.4}", a.alpha)),
        (None, Some(e)) => out.notes.push(format!("cronbach alpha unavailable: {e}")),
        _ => {}
    }
    Ok(out)
}

fn parse_success(s: &str) -> CliResult<(u64, u64)> {
    let bad = || CliError::validation(format!("expected X/N, got {s:?}"));
    let (x, n) = s.split_once('/').ok_or_else(bad)?;
    let x = x.trim().parse().map_err(|_| bad())?;
    let n = n.trim().parse().map_err(|_| bad())?;
    Ok((x, n))
}

struct Success {
    name: Option<String>,
    x: u64,
    n: u64,
}

fn load_success(
    pyramid: &Option<PathBuf>,
    literal: &Option<String>,
    role: &str,
    prov: &mut Provenance,
) -> CliResult<Option<Success>> {
    if let Some(path) = pyramid {
        let bytes = read_input(path)?;
        prov.input(role, path, &bytes);
        let file: PyramidFile = serde_json::from_slice(&bytes)
            .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
        return Ok(Some(Success {
            name: Some(file.cohort),
            x: file.x as u64,
            n: file.n as u64,
        }));
    }
    literal
        .as_deref()
        .map(|s| parse_success(s).map(|(x, n)| Success { name: None, x, n }))
        .transpose()
}

fn load_survey_means(
    path: &Path,
    role: &str,
    cfg: &RunConfig,
    prov: &mut Provenance,
    warnings: &mut Vec<String>,
) -> CliResult<Vec<f64>> {
    let bytes = read_input(path)?;
    prov.input(role, path, &bytes);
    let parsed = parse_survey(bytes.as_slice())?;
    let rows = accept(parsed, path, cfg.strict, warnings)?;
    Ok(rows.iter().map(SurveyResponse::mean).collect())
}

fn load_combined(
    scored: &Option<PathBuf>,
    rfm: &Option<PathBuf>,
    side: &str,
    rules: &mut Option<ScoringRuleSet>,
    cfg: &RunConfig,
    prov: &mut Provenance,
    warnings: &mut Vec<String>,
) -> CliResult<Option<Vec<f64>>> {
    let codes = if let Some(path) = scored {
        let bytes = read_input(path)?;
        prov.input(&format!("{side}_scored"), path, &bytes);
        let parsed = parse_scored(bytes.as_slice())?;
        accept(parsed, path, cfg.strict, warnings)?
    } else if let Some(path) = rfm {
        let records = load_records(path, false, &format!("{side}_rfm"), cfg, prov, warnings)?;
        if rules.is_none() {
            *rules = Some(load_rules(cfg, prov)?);
        }
        score_cohort(&records, rules.as_ref().expect("rules loaded"))
    } else {
        return Ok(None);
    };
    Ok(Some(codes.iter().map(|c| f64::from(c.combined)).collect()))
}

pub fn compare(args: &CompareArgs, cfg: &RunConfig) -> CliResult<Outcome> {
    let mut prov = Provenance::new();
    let mut warnings = Vec::new();
    let sig = cfg.significance;
    let wanted = |h: Hypothesis| args.hypotheses.is_empty() || args.hypotheses.contains(&h);
    let explicit = |h: Hypothesis| args.hypotheses.contains(&h);

    let mut h1 = None;
    if wanted(Hypothesis::H1) {
        match (&args.a_survey, &args.b_survey) {
            (Some(pa), Some(pb)) => {
                let a = load_survey_means(pa, "a_survey", cfg, &mut prov, &mut warnings)?;
                let b = load_survey_means(pb, "b_survey", cfg, &mut prov, &mut warnings)?;
                let r = mann_whitney_u(&a, &b)?;
                h1 = Some(Section {
                    hypothesis: "attitudinal loyalty differs between cohorts".into(),
                    test: "mann_whitney_u".into(),
                    statistic: r.z,
                    p_value: r.p_two_tailed,
                    significance: sig,
                    decision: Decision::from_p(r.p_two_tailed, sig),
                    result: r,
                });
            }
            _ if explicit(Hypothesis::H1) => {
                return Err(CliError::validation("h1 needs --a-survey and --b-survey"))
            }
            _ => {}
        }
    }

    let mut h2 = None;
    if wanted(Hypothesis::H2) {
        let mut rules = None;
        let a = load_combined(
            &args.a_scored,
            &args.a_rfm,
            "a",
            &mut rules,
            cfg,
            &mut prov,
            &mut warnings,
        )?;
        let b = load_combined(
            &args.b_scored,
            &args.b_rfm,
            "b",
            &mut rules,
            cfg,
            &mut prov,
            &mut warnings,
        )?;
        match (a, b) {
            (Some(a), Some(b)) => {
                let r = t_test_independent(&a, &b)?;
                h2 = Some(Section {
                    hypothesis: "behavioural loyalty differs between cohorts".into(),
                    test: "student_t_independent".into(),
                    statistic: r.t,
                    p_value: r.p_two_tailed,
                    significance: sig,
                    decision: Decision::from_p(r.p_two_tailed, sig),
                    result: r,
                });
            }
            _ if explicit(Hypothesis::H2) => {
                return Err(CliError::validation(
                    "h2 needs --a-scored or --a-rfm and --b-scored or --b-rfm",
                ))
            }
            _ => {}
        }
    }

    let mut names = (None, None);
    let mut h3 = None;
    if wanted(Hypothesis::H3) {
        let a = load_success(&args.a_pyramid, &args.a_success, "a_pyramid", &mut prov)?;
        let b = load_success(&args.b_pyramid, &args.b_success, "b_pyramid", &mut prov)?;
        match (a, b) {
            (Some(a), Some(b)) => {
                let r = two_proportion_z(a.x, a.n, b.x, b.n)?;
                h3 = Some(Section {
                    hypothesis: "share of Gold and Platinum customers differs between cohorts"
                        .into(),
                    test: "two_proportion_z".into(),
                    statistic: r.z,
                    p_value: r.p_two_tailed,
                    significance: sig,
                    decision: Decision::from_p(r.p_two_tailed, sig),
                    result: r,
                });
                names = (a.name, b.name);
            }
            _ if explicit(Hypothesis::H3) => {
                return Err(CliError::validation(
                    "h3 needs --a-pyramid or --a-success and --b-pyramid or --b-success",
                ))
            }
            _ => {}
        }
    }

    if h1.is_none() && h2.is_none() && h3.is_none() {
        return Err(CliError::validation(
            "nothing to compare: supply inputs for at least one hypothesis",
        ));
    }
    let report = ComparisonFile {
        cohort_a: args
            .a_name
            .clone()
            .or(names.0)
            .unwrap_or_else(|| "a".into()),
        cohort_b: args
            .b_name
            .clone()
            .or(names.1)
            .unwrap_or_else(|| "b".into()),
        significance: sig,
        h1,
        h2,
        h3,
        provenance: prov,
    };
    let dir = out_dir(cfg)?;
    let mut out = Outcome::default();
    out.write(dir, "comparison.json", to_json(&report).as_bytes())?;
    let mut note = |h: &str, test: &str, stat: f64, p: f64, d: Decision| {
        out.notes.push(format!(
            "{h} {test}: statistic {stat:.4}, p = {p:.4e}, {d:?}"
        ));
    };
    if let Some(s) = &report.h1 {
        note("h1", &s.test, s.statistic, s.p_value, s.decision);
    }
    if let Some(s) = &report.h2 {
        note("h2", &s.test, s.statistic, s.p_value, s.decision);
    }
    if let Some(s) = &report.h3 {
        note("h3", &s.test, s.statistic, s.p_value, s.decision);
    }
    Ok(out)
}

pub fn synth(args: &SynthArgs, cfg: &RunConfig) -> CliResult<Outcome> {
    let seed = cfg.kmeans.seed;
    let dir = out_dir(cfg)?;
    let mut out = Outcome::default();
    let default_prefix = match (args.kind, args.preset) {
        (SynthKind::Survey, _) => "r",
        (_, Preset::Computer) => "cmp",
        (_, Preset::Automotive) => "aut",
    };
    let prefix = args.prefix.as_deref().unwrap_or(default_prefix);

    if args.kind == SynthKind::Survey {
        if args.n == 0 {
            return Err(CliError::validation("--n must be positive"));
        }
        let rows = gen_survey(args.n, args.shift, seed, prefix);
        let mut csv = Vec::new();
        write_survey(&rows, &mut csv)?;
        out.write(dir, "survey.csv", &csv)?;
        out.notes.push(format!("{} respondents", rows.len()));
        return Ok(out);
    }

    let mut spec = match args.preset {
        Preset::Computer => PlantedSpec::computer(seed),
        Preset::Automotive => PlantedSpec::automotive(seed),
    };
    spec.id_prefix = prefix.to_string();
    let (codes, truth) = match args.kind {
        SynthKind::Planted => {
            spec.jitter = args.jitter;
            let planted = plant_clusters(&spec)?;
            let mut truth = String::from("customer_id,group\n");
            for (c, g) in planted.codes.iter().zip(&planted.groups) {
                truth.push_str(&format!("{},{g}\n", c.customer_id));
            }
            (planted.codes, Some(truth))
        }
        SynthKind::CentroidShaped => {
            let centroids: Vec<(Point, usize)> = match args.preset {
                Preset::Computer => COMPUTER_CENTROIDS.to_vec(),
                Preset::Automotive => AUTOMOTIVE_CENTROIDS.to_vec(),
            };
            (centroid_shaped(&centroids, seed, prefix)?, None)
        }
        SynthKind::Survey => unreachable!("handled above"),
    };

    let rules = ScoringRuleSet::expert_default();
    let records = materialize_records(&codes, &rules, seed ^ 1)?;
    let mut csv = Vec::new();
    write_scored(&codes, &mut csv)?;
    out.write(dir, "scored.csv", &csv)?;
    let mut csv = Vec::new();
    write_rfm(&records, &mut csv)?;
    out.write(dir, "rfm.csv", &csv)?;
    if let Some(truth) = truth {
        out.write(dir, "truth.csv", truth.as_bytes())?;
    }
    if args.transactions {
        let date = cfg.analysis_date.ok_or_else(|| {
            CliError::validation("--analysis-date is required to write transactions")
        })?;
        let events = materialize_transactions(&records, date, seed ^ 2)?;
        let mut csv = Vec::new();
        write_transactions(&events, &mut csv)?;
        out.write(dir, "transactions.csv", &csv)?;
    }
    out.notes.push(format!("{} customers", codes.len()));
    Ok(out)
}
