//! `snn-dfsynth`: command-line driver with one subcommand per stage plus a
//! one-shot `synthesize`.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::anyhow;
use clap::{Args, Parser, Subcommand, ValueEnum};
use dfsynth_core::cluster::{cluster_greedy, cluster_mincut, utilization_report, ClusteredGraph};
use dfsynth_core::decompose::{decompose, DecomposedGraph};
use dfsynth_core::hardware::{dynapse_preset, load_hardware, save_hardware, ExecTimeModel};
use dfsynth_core::io::{read_json, write_json, write_text};
use dfsynth_core::mapping::{constrain, evaluate, evaluate_with_order, explore, ExploreOptions, Mapping, Objective};
use dfsynth_core::maxplus::{analyze, throughput_bound};
use dfsynth_core::pipeline::{synthesize, Clusterer, StageError, SynthesisOptions};
use dfsynth_core::schedule::{default_budget, self_timed_simulate, StaticOrder};
use dfsynth_core::sdfg::{break_cycles, build_sdfg, load_sdfg, repetition_vector, save_sdfg, strongly_connected_subgraphs};
use dfsynth_core::workload::{
    convert_relu_mlp, generate_poisson_workload, load_workload, output_rates, save_workload, Encoding, PoissonConfig,
    ReluMlp,
};
use dfsynth_core::{Error, ErrorClass};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "snn-dfsynth", version, about = "Map spiking neural networks onto crossbar neuromorphic hardware")]
struct Cli {
    /// Output format; each command picks a sensible default.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for parallel restarts (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Nanoseconds per tick when reporting frames per second.
    #[arg(long, global = true, default_value_t = 1.0)]
    tick_ns: f64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Workload files: validation, synthetic generation, ANN conversion.
    #[command(subcommand)]
    Workload(WorkloadCmd),
    /// Split high fan-in neurons into fanin-of-two units.
    Decompose {
        workload: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    /// Pack units into crossbar-sized clusters.
    Cluster {
        dsnn: PathBuf,
        #[arg(long, default_value_t = 128)]
        crossbar: usize,
        #[arg(long, value_enum, default_value_t = Algo::Greedy)]
        algo: Algo,
        #[command(flatten)]
        out: Output,
    },
    /// Dataflow graph construction and checks.
    #[command(subcommand)]
    Sdfg(SdfgCmd),
    /// Maximum cycle mean, throughput bound, and critical cycle of an SDFG.
    Analyze { sdfg: PathBuf },
    /// Hardware descriptions.
    #[command(subcommand)]
    Hw(HwCmd),
    /// Explore mappings and write the Pareto front.
    Map {
        sdfg: PathBuf,
        hw: PathBuf,
        #[command(flatten)]
        explore: ExploreArgs,
        #[command(flatten)]
        out: Output,
    },
    /// Static-order schedule of a mapping.
    Schedule {
        sdfg: PathBuf,
        hw: PathBuf,
        mapping: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    /// Self-timed simulation of a mapped, ordered graph.
    Simulate {
        sdfg: PathBuf,
        hw: PathBuf,
        mapping: PathBuf,
        /// Static order; derived from the mapping when omitted.
        #[arg(long)]
        order: Option<PathBuf>,
        /// Iteration budget for finding the periodic phase.
        #[arg(long)]
        budget: Option<usize>,
        #[command(flatten)]
        out: Output,
    },
    /// Run the whole flow and report throughput, energy, and utilization.
    Synthesize {
        workload: PathBuf,
        hw: PathBuf,
        /// Crossbar size for clustering (default: smallest tile crossbar).
        #[arg(long)]
        crossbar: Option<usize>,
        #[arg(long, value_enum, default_value_t = Algo::Greedy)]
        algo: Algo,
        #[command(flatten)]
        exec: ExecArgs,
        #[arg(long, default_value_t = 1)]
        frame_scale: u64,
        #[command(flatten)]
        explore: ExploreArgs,
        /// Directory for per-stage JSON and DOT artifacts.
        #[arg(long)]
        artifacts: Option<PathBuf>,
        #[command(flatten)]
        out: Output,
    },
}

#[derive(Subcommand)]
enum WorkloadCmd {
    /// Parse and check a workload file.
    Validate { file: PathBuf },
    /// Fully connected feed-forward workload with Poisson inputs.
    Gen {
        /// Comma-separated layer sizes, input first.
        #[arg(long, value_delimiter = ',', required = true)]
        topology: Vec<usize>,
        /// Mean input rate in spikes per second.
        #[arg(long, default_value_t = 100.0)]
        rate: f64,
        #[arg(long, default_value_t = 1000.0)]
        duration_ms: f64,
        #[command(flatten)]
        out: Output,
    },
    /// Convert a ReLU network (JSON) into a rate-coded IF workload.
    Convert {
        mlp: PathBuf,
        /// Comma-separated input activations in [0, 1].
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        input: Vec<f64>,
        #[arg(long, default_value_t = 1000.0)]
        window_ms: f64,
        #[command(flatten)]
        out: Output,
    },
}

#[derive(Subcommand)]
enum SdfgCmd {
    /// Build the dataflow graph of a clustered network.
    Build {
        csnn: PathBuf,
        #[command(flatten)]
        exec: ExecArgs,
        #[arg(long, default_value_t = 1)]
        frame_scale: u64,
        #[command(flatten)]
        out: Output,
    },
    /// Check consistency and liveness.
    Check { sdfg: PathBuf },
    /// Remove cycle-closing channels with a full iteration of tokens.
    BreakCycles {
        sdfg: PathBuf,
        #[command(flatten)]
        out: Output,
    },
}

#[derive(Subcommand)]
enum HwCmd {
    /// Mesh of identical tiles with default energy and buffer parameters.
    Preset {
        /// Mesh size as WxH.
        #[arg(long, default_value = "2x2", value_parser = parse_mesh)]
        mesh: (u32, u32),
        #[arg(long, default_value_t = 128)]
        crossbar: usize,
        /// Override every tile's input and output buffer, in tokens.
        #[arg(long)]
        buffers: Option<u64>,
        #[command(flatten)]
        out: Output,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    Greedy,
    Mincut,
}

#[derive(Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    /// Energy times period.
    EnergyPeriod,
    /// Period, then energy.
    Throughput,
}

#[derive(Args)]
struct Output {
    /// Output file (default: stdout).
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Also write a Graphviz rendering of the result.
    #[arg(long)]
    dot: Option<PathBuf>,
}

#[derive(Args)]
struct ExploreArgs {
    /// Number of random restarts.
    #[arg(long, default_value_t = 20)]
    eta: usize,
    #[arg(long, value_enum, default_value_t = ObjectiveArg::EnergyPeriod)]
    objective: ObjectiveArg,
}

#[derive(Args)]
struct ExecArgs {
    /// Actor execution time: ticks per firing.
    #[arg(long, default_value_t = ExecTimeModel::default().base)]
    exec_base: u64,
    /// Actor execution time: extra ticks per crossbar input row.
    #[arg(long, default_value_t = ExecTimeModel::default().per_input_row)]
    exec_per_row: u64,
    /// Actor execution time: extra ticks per internal spike.
    #[arg(long, default_value_t = ExecTimeModel::default().per_spike)]
    exec_per_spike: u64,
}

impl ExecArgs {
    fn model(&self) -> ExecTimeModel {
        ExecTimeModel {
            base: self.exec_base,
            per_input_row: self.exec_per_row,
            per_spike: self.exec_per_spike,
        }
    }
}

impl ExploreArgs {
    fn options(&self, seed: u64) -> ExploreOptions {
        ExploreOptions {
            eta: self.eta,
            seed,
            objective: match self.objective {
                ObjectiveArg::EnergyPeriod => Objective::EnergyPeriod,
                ObjectiveArg::Throughput => Objective::Throughput,
            },
            ..ExploreOptions::default()
        }
    }
}

fn parse_mesh(s: &str) -> Result<(u32, u32), String> {
    let (w, h) = s.split_once(['x', 'X']).ok_or("expected WxH, e.g. 4x4")?;
    let w = w.parse().map_err(|e| format!("mesh width: {e}"))?;
    let h = h.parse().map_err(|e| format!("mesh height: {e}"))?;
    Ok((w, h))
}

/// Exit code for a failed run.
fn exit_code(e: &anyhow::Error) -> u8 {
    let class = e
        .chain()
        .find_map(|c| {
            c.downcast_ref::<Error>()
                .map(Error::class)
                .or_else(|| c.downcast_ref::<StageError>().map(|s| s.source.class()))
        })
        .unwrap_or(ErrorClass::Internal);
    match class {
        ErrorClass::Validation => 2,
        ErrorClass::Infeasible => 3,
        ErrorClass::Internal => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(4);
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// Writes `text` to the output file, or stdout.
fn emit(out: &Output, text: &str) -> anyhow::Result<()> {
    match &out.output {
        Some(p) => write_text(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn emit_json<T: Serialize>(out: &Output, value: &T) -> anyhow::Result<()> {
    match &out.output {
        Some(p) => write_json(p, value)?,
        None => println!("{}", serde_json::to_string_pretty(value)?),
    }
    Ok(())
}

fn emit_dot(out: &Output, dot: impl FnOnce() -> String) -> anyhow::Result<()> {
    if let Some(p) = &out.dot {
        write_text(p, &dot())?;
    }
    Ok(())
}

/// Rejects formats a command cannot produce.
fn format_or(cli: &Cli, default: Format, allowed: &[Format]) -> anyhow::Result<Format> {
    let f = cli.format.unwrap_or(default);
    if allowed.contains(&f) {
        Ok(f)
    } else {
        Err(Error::Invalid {
            what: "format",
            message: "this command does not support the requested format".into(),
        }
        .into())
    }
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    match &cli.command {
        Command::Workload(cmd) => run_workload(cli, cmd),
        Command::Decompose { workload, out } => {
            format_or(cli, Format::Json, &[Format::Json])?;
            let d = decompose(&load_workload(workload)?);
            emit_dot(out, || d.to_dot())?;
            emit_json(out, &d)
        }
        Command::Cluster {
            dsnn,
            crossbar,
            algo,
            out,
        } => {
            let f = format_or(cli, Format::Json, &[Format::Json, Format::Text])?;
            let d: DecomposedGraph = read_json(dsnn)?;
            let c = match algo {
                Algo::Greedy => cluster_greedy(&d, *crossbar)?,
                Algo::Mincut => cluster_mincut(&d, *crossbar, cli.seed)?,
            };
            emit_dot(out, || c.to_dot())?;
            match f {
                Format::Text => {
                    let u = utilization_report(&c, *crossbar);
                    emit(
                        out,
                        &format!(
                            "clusters {}\nconnections {}\ncut spikes per frame {}\nmean synapse utilization {:.1}%\nmean neuron utilization {:.1}%\n",
                            c.clusters.len(),
                            c.connections.len(),
                            c.cut_spikes(),
                            u.mean_synapse_pct,
                            u.mean_neuron_pct
                        ),
                    )
                }
                _ => emit_json(out, &c),
            }
        }
        Command::Sdfg(cmd) => run_sdfg(cli, cmd),
        Command::Analyze { sdfg } => {
            let f = format_or(cli, Format::Text, &[Format::Json, Format::Text])?;
            let g = load_sdfg(sdfg)?;
            let crit = analyze(&g)?;
            let bound = throughput_bound(&g)?;
            let out = Output { output: None, dot: None };
            match f {
                Format::Json => emit_json(
                    &out,
                    &serde_json::json!({
                        "mcm": crit.as_ref().map(|c| c.ratio.to_string()),
                        "throughput_bound": bound.map(|b| b.to_string()),
                        "critical_cycle": crit.as_ref().map(|c| &c.cycle),
                    }),
                ),
                _ => match crit {
                    Some(c) => emit(
                        &out,
                        &format!(
                            "mcm {}\nthroughput bound {}\ncritical cycle {:?}\n",
                            c.ratio,
                            bound.map_or("unbounded".to_string(), |b| b.to_string()),
                            c.cycle
                        ),
                    ),
                    None => emit(&out, "graph has no cycle; throughput is unbounded\n"),
                },
            }
        }
        Command::Hw(HwCmd::Preset {
            mesh,
            crossbar,
            buffers,
            out,
        }) => {
            format_or(cli, Format::Json, &[Format::Json])?;
            let mut hw = dynapse_preset(mesh.0, mesh.1, *crossbar)?;
            if let Some(b) = buffers {
                hw = hw.with_buffers(*b)?;
            }
            match &out.output {
                Some(p) => save_hardware(p, &hw)?,
                None => emit_json(out, &hw)?,
            }
            Ok(())
        }
        Command::Map { sdfg, hw, explore: ex, out } => {
            let f = format_or(cli, Format::Json, &[Format::Json, Format::Csv])?;
            let g = load_sdfg(sdfg)?;
            let hw = load_hardware(hw)?;
            let front = explore(&g, &hw, &ex.options(cli.seed))?;
            match f {
                Format::Csv => emit(out, &front.to_csv()),
                _ => emit_json(out, &front),
            }
        }
        Command::Schedule { sdfg, hw, mapping, out } => {
            let f = format_or(cli, Format::Json, &[Format::Json, Format::Text])?;
            let g = load_sdfg(sdfg)?;
            let hw = load_hardware(hw)?;
            let m: Mapping = read_json(mapping)?;
            let e = evaluate(&g, &hw, &m)?;
            match f {
                Format::Text => {
                    let mut s = format!("period {} ticks\n", e.period);
                    for (t, actors) in e.order.tiles.iter().enumerate() {
                        s.push_str(&format!("tile {t}: {actors:?}\n"));
                    }
                    emit(out, &s)
                }
                _ => emit_json(out, &e.order),
            }
        }
        Command::Simulate {
            sdfg,
            hw,
            mapping,
            order,
            budget,
            out,
        } => {
            let f = format_or(cli, Format::Text, &[Format::Json, Format::Csv, Format::Text])?;
            let g = load_sdfg(sdfg)?;
            let hw = load_hardware(hw)?;
            let m: Mapping = read_json(mapping)?;
            let e = match order {
                Some(p) => evaluate_with_order(&g, &hw, &m, &read_json::<StaticOrder>(p)?)?,
                None => evaluate(&g, &hw, &m)?,
            };
            let constrained = constrain(&g, &hw, &m)?;
            let budget = budget.unwrap_or_else(|| default_budget(&constrained));
            let trace = self_timed_simulate(&constrained, &e.order, budget)?;
            match f {
                Format::Json => emit(out, &trace.to_jsonl()),
                Format::Csv => emit(out, &trace.to_gantt_csv()),
                Format::Text => emit(
                    out,
                    &format!(
                        "simulated throughput {} per tick\nanalyzed throughput {} per tick\ntransient {} iterations\nperiodic phase {} iterations in {} ticks\nfirings recorded {}{}\n",
                        trace.throughput,
                        e.throughput,
                        trace.transient_iterations,
                        trace.period_iterations,
                        trace.period_ticks,
                        trace.firings.len(),
                        if trace.truncated { " (truncated)" } else { "" }
                    ),
                ),
            }
        }
        Command::Synthesize {
            workload,
            hw,
            crossbar,
            algo,
            exec,
            frame_scale,
            explore: ex,
            artifacts,
            out,
        } => {
            let f = format_or(cli, Format::Text, &[Format::Json, Format::Csv, Format::Text])?;
            let w = load_workload(workload)?;
            let hw = load_hardware(hw)?;
            let opts = SynthesisOptions {
                crossbar: *crossbar,
                clusterer: match algo {
                    Algo::Greedy => Clusterer::Greedy,
                    Algo::Mincut => Clusterer::Mincut,
                },
                exec: exec.model(),
                frame_scale: *frame_scale,
                explore: ex.options(cli.seed),
                tick_ns: cli.tick_ns,
                sim_budget: None,
                artifacts: artifacts.clone(),
            };
            let Some(s) = synthesize(&w, &hw, &opts)? else {
                eprintln!("nothing to synthesize: the workload has no neurons");
                return Ok(());
            };
            emit_dot(out, || s.sdfg.to_dot())?;
            match f {
                Format::Json => emit_json(out, &s.report),
                Format::Csv => emit(out, &s.report.to_csv()),
                Format::Text => emit(out, &s.report.to_text()),
            }
        }
    }
}

fn run_workload(cli: &Cli, cmd: &WorkloadCmd) -> anyhow::Result<()> {
    match cmd {
        WorkloadCmd::Validate { file } => {
            let f = format_or(cli, Format::Text, &[Format::Json, Format::Text])?;
            let w = load_workload(file)?;
            let total: usize = w.spikes().values().map(Vec::len).sum();
            let out = Output { output: None, dot: None };
            match f {
                Format::Json => emit_json(
                    &out,
                    &serde_json::json!({
                        "valid": true,
                        "neurons": w.neurons().len(),
                        "synapses": w.synapses().len(),
                        "spikes": total,
                        "duration_us": w.duration_us(),
                        "frames": w.frames().to_string(),
                    }),
                ),
                _ => emit(
                    &out,
                    &format!(
                        "ok: {} neurons, {} synapses, {} spikes over {} ms ({} frames)\n",
                        w.neurons().len(),
                        w.synapses().len(),
                        total,
                        w.duration_us() as f64 / 1000.0,
                        w.frames()
                    ),
                ),
            }
        }
        WorkloadCmd::Gen {
            topology,
            rate,
            duration_ms,
            out,
        } => {
            format_or(cli, Format::Json, &[Format::Json])?;
            let w = generate_poisson_workload(&PoissonConfig {
                topology: topology.clone(),
                rate_hz: *rate,
                duration_ms: *duration_ms,
                seed: cli.seed,
            })?;
            write_workload(out, &w)
        }
        WorkloadCmd::Convert {
            mlp,
            input,
            window_ms,
            out,
        } => {
            let f = format_or(cli, Format::Json, &[Format::Json, Format::Text])?;
            let net: ReluMlp = read_json(mlp)?;
            let w = convert_relu_mlp(&net, input, Encoding::Rate, *window_ms)?;
            match f {
                Format::Text => {
                    let analog = net.forward(input)?;
                    let last = analog.last().ok_or_else(|| anyhow!("network has no layers"))?;
                    let mut s = String::from("output,analog,spike_rate_hz\n");
                    for ((id, hz), a) in output_rates(&w).iter().zip(last) {
                        s.push_str(&format!("{id},{a:.6},{hz:.3}\n"));
                    }
                    emit(out, &s)
                }
                _ => write_workload(out, &w),
            }
        }
    }
}

fn write_workload(out: &Output, w: &dfsynth_core::SnnWorkload) -> anyhow::Result<()> {
    match &out.output {
        Some(p) => Ok(save_workload(p, w)?),
        None => emit(out, &format!("{}\n", w.to_json())),
    }
}

fn run_sdfg(cli: &Cli, cmd: &SdfgCmd) -> anyhow::Result<()> {
    match cmd {
        SdfgCmd::Build {
            csnn,
            exec,
            frame_scale,
            out,
        } => {
            format_or(cli, Format::Json, &[Format::Json])?;
            let c: ClusteredGraph = read_json(csnn)?;
            c.validate()?;
            let g = build_sdfg(&c, &exec.model(), *frame_scale)?;
            emit_dot(out, || g.to_dot())?;
            save_or_print(out, &g)
        }
        SdfgCmd::Check { sdfg } => {
            let f = format_or(cli, Format::Text, &[Format::Json, Format::Text])?;
            let g = load_sdfg(sdfg)?;
            let rv = repetition_vector(&g)?;
            let sccs: Vec<Vec<usize>> = strongly_connected_subgraphs(&g).into_iter().filter(|s| s.len() > 1).collect();
            // Liveness: a deadlocked cycle surfaces as an error here.
            break_cycles(&g)?;
            let out = Output { output: None, dot: None };
            match f {
                Format::Json => emit_json(
                    &out,
                    &serde_json::json!({
                        "consistent": true,
                        "live": true,
                        "repetition_vector": rv,
                        "cyclic_components": sccs,
                    }),
                ),
                _ => emit(
                    &out,
                    &format!(
                        "consistent and live: {} actors, {} channels\nrepetition vector {:?}\ncyclic components {:?}\n",
                        g.num_actors(),
                        g.channels().len(),
                        rv,
                        sccs
                    ),
                ),
            }
        }
        SdfgCmd::BreakCycles { sdfg, out } => {
            format_or(cli, Format::Json, &[Format::Json])?;
            let g = load_sdfg(sdfg)?;
            let b = break_cycles(&g)?;
            eprintln!("removed channels {:?}", b.removed);
            emit_dot(out, || b.acyclic.to_dot())?;
            save_or_print(out, &b.acyclic)
        }
    }
}

fn save_or_print(out: &Output, g: &dfsynth_core::Sdfg) -> anyhow::Result<()> {
    match &out.output {
        Some(p) => Ok(save_sdfg(p, g)?),
        None => emit_json(out, g),
    }
}
