use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use ucc_vqe::ansatz::{mp2_correlation, PrescreenConfig};
use ucc_vqe::circuit::{write_count_rows, GateCountRow};
use ucc_vqe::hamio::{read_fcidump, to_spin_orbitals, FixtureManifest, SpinLayout, SpinOrbitalHamiltonian};
use ucc_vqe::resources::{fit_quadratic, published_models, read_cost_points, BASIS_SERIES};
use ucc_vqe::units::to_kj_per_mol;
use ucc_vqe::vqe::{self, RunManifest, VqeConfig};
use ucc_vqe::workflow::{
    bracket_report, pipeline_gate_counts, run_reaction_vqe, sha256_file, ReactionSpec,
    ReferenceTable, RunOptions,
};
use ucc_vqe::{fci, Error};

#[derive(Parser)]
#[command(name = "ucc-vqe", version, about = "UCCSD-VQE simulation and resource estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Space {
    /// FCIDUMP file.
    fcidump: PathBuf,
    /// Frozen core spatial orbitals.
    #[arg(long, default_value_t = 0)]
    freeze: usize,
    /// Keep only the lowest m virtual spin orbitals.
    #[arg(long)]
    keep_virt: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Pre-screened UCCSD-VQE on one Hamiltonian; prints a JSON report.
    RunVqe {
        #[command(flatten)]
        space: Space,
        #[arg(long, default_value_t = 1e-5)]
        cutoff: f64,
        /// Report uncancelled gate counts.
        #[arg(long)]
        no_cancel: bool,
        #[arg(long, default_value_t = 1)]
        trotter: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact ground state in the reference particle-number sector.
    Fci {
        #[command(flatten)]
        space: Space,
        /// Target spin multiplicity (restricted orbitals only).
        #[arg(long)]
        multiplicity: Option<u32>,
    },
    /// MP2 correlation energy.
    Mp2 {
        #[command(flatten)]
        space: Space,
    },
    /// Two-qubit gate counts over a series of truncated active spaces (CSV).
    CountGates {
        fcidump: PathBuf,
        #[arg(long, default_value_t = 0)]
        freeze: usize,
        #[arg(long, value_delimiter = ',', required = true)]
        qubits_list: Vec<usize>,
        #[arg(long, default_value_t = 1e-5)]
        cutoff: f64,
        #[arg(long)]
        no_cancel: bool,
        #[arg(long, default_value = "")]
        molecule: String,
        #[arg(long, default_value = "")]
        basis: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Quadratic fit of a gate-count CSV and extrapolation.
    FitExtrapolate {
        counts: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        predict: Vec<usize>,
    },
    /// Reaction energy from per-species VQE runs.
    React {
        spec: PathBuf,
        #[arg(long)]
        fixtures: PathBuf,
        #[arg(long, default_value = "sto-3g")]
        basis: String,
        /// Skip the exact reference solves.
        #[arg(long)]
        no_fci: bool,
    },
    /// Worst/best-case basis-set bracket of a reaction from reference data.
    Bracket {
        /// Reference CSV; the bundled table when omitted.
        #[arg(long)]
        table: Option<PathBuf>,
        /// Bundled reaction name or a reaction spec file.
        #[arg(long)]
        reaction: String,
        #[arg(long, value_delimiter = ',')]
        bases: Option<Vec<String>>,
    },
}

fn hamiltonian(space: &Space) -> Result<SpinOrbitalHamiltonian, Error> {
    let si = read_fcidump(&space.fcidump)?;
    let h = to_spin_orbitals(si, SpinLayout::Interleaved)?;
    let core = h.core_orbitals(space.freeze);
    let h = h.freeze_core(&core)?;
    match space.keep_virt {
        Some(m) => Ok(h.select_active(m)?.0),
        None => Ok(h),
    }
}

fn energy_line(label: &str, hartree: f64) -> String {
    format!("{label:<12} {hartree:>18.10} Eh {:>16.4} kJ/mol", to_kj_per_mol(hartree))
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<(), Error> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::InvalidInput(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct RunReport {
    #[serde(flatten)]
    run: RunManifest,
    cancelled: bool,
    two_qubit_gates: usize,
    single_qubit_gates: usize,
}

fn reaction_spec(arg: &str) -> Result<ReactionSpec, Error> {
    if Path::new(arg).is_file() {
        ReactionSpec::load(arg)
    } else {
        ReactionSpec::builtin(arg)
    }
}

fn run(cmd: Command) -> Result<(), Box<dyn std::error::Error>> {
    match cmd {
        Command::RunVqe { space, cutoff, no_cancel, trotter, out } => {
            let h = hamiltonian(&space)?;
            let cfg = VqeConfig { trotter_n: trotter, ..VqeConfig::default() };
            let screen = PrescreenConfig::with_cutoff(cutoff);
            let r = vqe::optimize(&h, &h.active_space(), &cfg, &screen)?;
            let counts = pipeline_gate_counts(&h, &screen, !no_cancel)?;
            let mut run = RunManifest::new(&r, &cfg, &screen);
            run.fixture = Some(space.fcidump.display().to_string());
            run.fixture_sha256 = Some(sha256_file(&space.fcidump)?);
            let report = RunReport {
                run,
                cancelled: !no_cancel,
                two_qubit_gates: counts.two_qubit,
                single_qubit_gates: counts.single_qubit,
            };
            let json = serde_json::to_string_pretty(&report)? + "\n";
            write_or_print(out.as_deref(), &json)?;
            if out.is_some() {
                eprintln!("{}", energy_line("correlation", r.correlation));
            }
        }
        Command::Fci { space, multiplicity } => {
            let h = hamiltonian(&space)?;
            let r = fci::solve(&h, multiplicity)?;
            println!("determinants {}", r.dimension);
            println!("{}", energy_line("hf", h.hf_energy()));
            println!("{}", energy_line("fci", r.energy));
            println!("{}", energy_line("correlation", r.correlation));
            if let Some(s2) = r.spin_squared {
                println!("<S^2>        {:.6}", s2.max(0.0));
            }
        }
        Command::Mp2 { space } => {
            let h = hamiltonian(&space)?;
            let e = mp2_correlation(&h)?;
            println!("{}", energy_line("hf", h.hf_energy()));
            println!("{}", energy_line("mp2 corr", e));
        }
        Command::CountGates { fcidump, freeze, qubits_list, cutoff, no_cancel, molecule, basis, out } => {
            let space = Space { fcidump, freeze, keep_virt: None };
            let h = hamiltonian(&space)?;
            let n_occ = h.occupied().len();
            let screen = PrescreenConfig::with_cutoff(cutoff);
            let mut rows = Vec::new();
            for q in qubits_list {
                let keep = q.checked_sub(n_occ).ok_or_else(|| {
                    Error::InvalidInput(format!("{q} qubits cannot hold {n_occ} occupied spin orbitals"))
                })?;
                let (hq, _) = h.select_active(keep)?;
                let c = pipeline_gate_counts(&hq, &screen, !no_cancel)?;
                rows.push(GateCountRow {
                    molecule: molecule.clone(),
                    basis: basis.clone(),
                    n_qubits: q,
                    cutoff,
                    cancelled: !no_cancel,
                    two_qubit: c.two_qubit,
                    single_qubit: c.single_qubit,
                });
            }
            let mut buf = Vec::new();
            write_count_rows(&mut buf, &rows)?;
            write_or_print(out.as_deref(), &String::from_utf8(buf)?)?;
        }
        Command::FitExtrapolate { counts, predict } => {
            let f = std::fs::File::open(&counts)
                .map_err(|e| Error::InvalidInput(format!("{}: {e}", counts.display())))?;
            let m = fit_quadratic(&read_cost_points(f)?)?;
            println!("a = {:.4}  b = {:.4}  c = {:.4}  r^2 = {:.6}", m.a, m.b, m.c, m.r_squared.unwrap_or(f64::NAN));
            for n in predict {
                let g = m.predict(n);
                println!("{n:>6} qubits  {g:>14}  ({:.1e}) two-qubit gates", g as f64);
            }
        }
        Command::React { spec, fixtures, basis, no_fci } => {
            let spec = ReactionSpec::load(&spec)?;
            let manifest = FixtureManifest::load(&fixtures)?;
            let opts = RunOptions { basis, with_fci: !no_fci, ..RunOptions::default() };
            let run = run_reaction_vqe(&spec, &manifest, &opts)?;
            println!("{} ({})", spec.name, spec.label.as_deref().unwrap_or(""));
            for s in &run.species {
                println!(
                    "  {:<6} {:>3} qubits {:>7} two-qubit  {}",
                    s.species,
                    s.n_qubits,
                    s.two_qubit,
                    energy_line("E(VQE)", s.vqe.energy)
                );
            }
            let line = |label: &str, kj: f64| {
                println!("{label:<20} {kj:>12.3} kJ/mol {:>14.8} Eh", ucc_vqe::units::to_hartree(kj))
            };
            line("E_react(HF)", run.hf_kj_per_mol);
            if let Some(f) = run.fci_kj_per_mol {
                line("E_react(FCI)", f);
            }
            line("E_react(UCCSD-VQE)", run.vqe_kj_per_mol);
            println!("max qubits {}  max two-qubit gates {}", run.max_qubits, run.max_two_qubit);
        }
        Command::Bracket { table, reaction, bases } => {
            let table = match table {
                Some(p) => ReferenceTable::load(p)?,
                None => ReferenceTable::bundled(),
            };
            let spec = reaction_spec(&reaction)?;
            let bases: Vec<String> = bases.unwrap_or_else(|| BASIS_SERIES.iter().map(|s| s.to_string()).collect());
            let refs: Vec<&str> = bases.iter().map(String::as_str).collect();
            let models: BTreeMap<&str, _> = published_models();
            let r = bracket_report(&spec, &table, &refs, &models)?;
            print!("{}", r.to_text());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
