//! Key schema: every configurable value, its canonical unit and constraint.
//!
//! Keys are `section.stem_unit` (e.g. `bias.optical_power_uW`). Any unit of
//! the same dimension is accepted and converted; a unit of another dimension
//! is a unit mismatch. Dimensionless keys carry no suffix.

use crate::params::ParamBundle;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Power,
    Voltage,
    Current,
    Resistance,
    Conductance,
    Capacitance,
    Time,
    Frequency,
    Length,
    Temperature,
    Angle,
    Responsivity,
    ResistancePerLength,
    HeatCapacityPerLength,
    ThermalConductancePerLength,
    LossPerLength,
    ReadoutResponsivity,
    PowerLevel,
    Dimensionless,
}

/// `(suffix, dimension, factor to the dimension's base unit)`.
const UNITS: &[(&str, Dimension, f64)] = &[
    ("W", Dimension::Power, 1.0),
    ("mW", Dimension::Power, 1e-3),
    ("uW", Dimension::Power, 1e-6),
    ("nW", Dimension::Power, 1e-9),
    ("V", Dimension::Voltage, 1.0),
    ("mV", Dimension::Voltage, 1e-3),
    ("uV", Dimension::Voltage, 1e-6),
    ("A", Dimension::Current, 1.0),
    ("mA", Dimension::Current, 1e-3),
    ("uA", Dimension::Current, 1e-6),
    ("nA", Dimension::Current, 1e-9),
    ("Ohm", Dimension::Resistance, 1.0),
    ("kOhm", Dimension::Resistance, 1e3),
    ("MOhm", Dimension::Resistance, 1e6),
    ("S", Dimension::Conductance, 1.0),
    ("mS", Dimension::Conductance, 1e-3),
    ("uS", Dimension::Conductance, 1e-6),
    ("F", Dimension::Capacitance, 1.0),
    ("nF", Dimension::Capacitance, 1e-9),
    ("pF", Dimension::Capacitance, 1e-12),
    ("s", Dimension::Time, 1.0),
    ("ms", Dimension::Time, 1e-3),
    ("us", Dimension::Time, 1e-6),
    ("ns", Dimension::Time, 1e-9),
    ("Hz", Dimension::Frequency, 1.0),
    ("kHz", Dimension::Frequency, 1e3),
    ("MHz", Dimension::Frequency, 1e6),
    ("m", Dimension::Length, 1.0),
    ("cm", Dimension::Length, 1e-2),
    ("mm", Dimension::Length, 1e-3),
    ("um", Dimension::Length, 1e-6),
    ("K", Dimension::Temperature, 1.0),
    ("rad", Dimension::Angle, 1.0),
    ("deg", Dimension::Angle, std::f64::consts::PI / 180.0),
    ("A_per_W", Dimension::Responsivity, 1.0),
    ("Ohm_per_m", Dimension::ResistancePerLength, 1.0),
    ("J_per_K_m", Dimension::HeatCapacityPerLength, 1.0),
    ("W_per_K_m", Dimension::ThermalConductancePerLength, 1.0),
    ("dB_per_cm", Dimension::LossPerLength, 1.0),
    ("mV_per_uW", Dimension::ReadoutResponsivity, 1.0),
    ("dBm", Dimension::PowerLevel, 1.0),
];

pub fn unit(suffix: &str) -> Option<(Dimension, f64)> {
    UNITS
        .iter()
        .find(|(s, _, _)| *s == suffix)
        .map(|&(_, d, f)| (d, f))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constraint {
    Any,
    Positive,
    NonNegative,
    /// `(0, 1]`
    Fraction,
    /// `[0, 1]`
    Probability,
    /// `[0, 1)`
    HalfOpenUnit,
}

impl Constraint {
    pub fn check(self, v: f64) -> Result<(), &'static str> {
        let ok = v.is_finite()
            && match self {
                Constraint::Any => true,
                Constraint::Positive => v > 0.0,
                Constraint::NonNegative => v >= 0.0,
                Constraint::Fraction => v > 0.0 && v <= 1.0,
                Constraint::Probability => (0.0..=1.0).contains(&v),
                Constraint::HalfOpenUnit => (0.0..1.0).contains(&v),
            };
        if ok {
            return Ok(());
        }
        Err(match self {
            Constraint::Any => "must be finite",
            Constraint::Positive => "must be > 0",
            Constraint::NonNegative => "must be >= 0",
            Constraint::Fraction => "must lie in (0, 1]",
            Constraint::Probability => "must lie in [0, 1]",
            Constraint::HalfOpenUnit => "must lie in [0, 1)",
        })
    }
}

pub type RealField = fn(&mut ParamBundle) -> &mut f64;
pub type CountField = fn(&mut ParamBundle) -> &mut u64;
pub type TextField = fn(&mut ParamBundle) -> &mut String;

#[derive(Clone, Copy)]
pub enum Slot {
    /// `canonical` is the documented unit of the key; `stored` the unit of
    /// the struct field (usually the SI base unit).
    Real {
        canonical: Option<&'static str>,
        stored: Option<&'static str>,
        constraint: Constraint,
        field: RealField,
    },
    Count {
        min: u64,
        field: CountField,
    },
    Text {
        field: TextField,
    },
}

#[derive(Clone, Copy)]
pub struct Entry {
    pub section: &'static str,
    pub stem: &'static str,
    pub slot: Slot,
}

impl Entry {
    /// The documented key, e.g. `bias.optical_power_uW`.
    pub fn key(&self) -> String {
        match self.slot {
            Slot::Real {
                canonical: Some(u), ..
            } => format!("{}.{}_{}", self.section, self.stem, u),
            _ => format!("{}.{}", self.section, self.stem),
        }
    }

    pub fn canonical_unit(&self) -> Option<&'static str> {
        match self.slot {
            Slot::Real { canonical, .. } => canonical,
            _ => None,
        }
    }

    pub fn dimension(&self) -> Option<Dimension> {
        self.canonical_unit().and_then(unit).map(|(d, _)| d)
    }
}

const fn real(
    section: &'static str,
    stem: &'static str,
    canonical: &'static str,
    stored: &'static str,
    constraint: Constraint,
    field: RealField,
) -> Entry {
    Entry {
        section,
        stem,
        slot: Slot::Real {
            canonical: Some(canonical),
            stored: Some(stored),
            constraint,
            field,
        },
    }
}

const fn plain(
    section: &'static str,
    stem: &'static str,
    constraint: Constraint,
    field: RealField,
) -> Entry {
    Entry {
        section,
        stem,
        slot: Slot::Real {
            canonical: None,
            stored: None,
            constraint,
            field,
        },
    }
}

const fn count(section: &'static str, stem: &'static str, min: u64, field: CountField) -> Entry {
    Entry {
        section,
        stem,
        slot: Slot::Count { min, field },
    }
}

const fn text(section: &'static str, stem: &'static str, field: TextField) -> Entry {
    Entry {
        section,
        stem,
        slot: Slot::Text { field },
    }
}

use Constraint::*;

pub static ENTRIES: &[Entry] = &[
    // photodiode
    real(
        "photodiode",
        "responsivity",
        "A_per_W",
        "A_per_W",
        Positive,
        |b| &mut b.photodiode.responsivity,
    ),
    real("photodiode", "knee_voltage", "V", "V", Positive, |b| {
        &mut b.photodiode.knee_voltage
    }),
    real("photodiode", "knee_sharpness", "V", "V", Positive, |b| {
        &mut b.photodiode.knee_sharpness
    }),
    real("photodiode", "dark_current", "nA", "A", NonNegative, |b| {
        &mut b.photodiode.dark_current
    }),
    // nanowire
    real(
        "nanowire",
        "normal_resistance",
        "MOhm",
        "Ohm",
        Positive,
        |b| &mut b.nanowire.normal_resistance,
    ),
    real(
        "nanowire",
        "resistance_per_length",
        "Ohm_per_m",
        "Ohm_per_m",
        Positive,
        |b| &mut b.nanowire.resistance_per_length,
    ),
    real(
        "nanowire",
        "heat_capacity_per_length",
        "J_per_K_m",
        "J_per_K_m",
        Positive,
        |b| &mut b.nanowire.heat_capacity_per_length,
    ),
    real(
        "nanowire",
        "thermal_conductance_per_length",
        "W_per_K_m",
        "W_per_K_m",
        Positive,
        |b| &mut b.nanowire.thermal_conductance_per_length,
    ),
    real(
        "nanowire",
        "critical_temperature_offset",
        "K",
        "K",
        Positive,
        |b| &mut b.nanowire.critical_temperature_offset,
    ),
    real(
        "nanowire",
        "nominal_bias_current",
        "uA",
        "A",
        Positive,
        |b| &mut b.nanowire.nominal_bias_current,
    ),
    plain("nanowire", "detection_plateau", Probability, |b| {
        &mut b.nanowire.detection_plateau
    }),
    real(
        "nanowire",
        "efficiency_current_scale",
        "uA",
        "A",
        Positive,
        |b| &mut b.nanowire.efficiency_current_scale,
    ),
    real(
        "nanowire",
        "leak_conductance",
        "uS",
        "S",
        NonNegative,
        |b| &mut b.nanowire.leak_conductance,
    ),
    real(
        "nanowire",
        "seed_resistance",
        "kOhm",
        "Ohm",
        Positive,
        |b| &mut b.nanowire.seed_resistance,
    ),
    plain("nanowire", "collapse_ratio", HalfOpenUnit, |b| {
        &mut b.nanowire.collapse_ratio
    }),
    // modulator
    real("modulator", "vpi_cold", "V", "V", Positive, |b| {
        &mut b.modulator.vpi_cold
    }),
    real("modulator", "vpi_warm", "V", "V", Positive, |b| {
        &mut b.modulator.vpi_warm
    }),
    real("modulator", "bias_phase", "rad", "rad", Any, |b| {
        &mut b.modulator.bias_phase
    }),
    plain("modulator", "fiber_to_fiber_efficiency", Fraction, |b| {
        &mut b.modulator.fiber_to_fiber_efficiency
    }),
    plain("modulator", "extinction_imbalance", HalfOpenUnit, |b| {
        &mut b.modulator.extinction_imbalance
    }),
    real("modulator", "capacitance", "pF", "F", Positive, |b| {
        &mut b.modulator.capacitance
    }),
    real(
        "modulator",
        "electrode_length",
        "mm",
        "m",
        NonNegative,
        |b| &mut b.modulator.electrode_length,
    ),
    real("modulator", "temperature", "K", "K", Positive, |b| {
        &mut b.modulator.temperature
    }),
    // optics
    plain("optics", "mode_overlap_in", Fraction, |b| {
        &mut b.optics.mode_overlap_in
    }),
    plain("optics", "mode_overlap_out", Fraction, |b| {
        &mut b.optics.mode_overlap_out
    }),
    plain("optics", "interface_transmission", Fraction, |b| {
        &mut b.optics.interface_transmission
    }),
    real(
        "optics",
        "propagation_loss",
        "dB_per_cm",
        "dB_per_cm",
        NonNegative,
        |b| &mut b.optics.propagation_loss,
    ),
    real(
        "optics",
        "path_length_one_way",
        "cm",
        "cm",
        NonNegative,
        |b| &mut b.optics.path_length_one_way,
    ),
    plain("optics", "mirror_reflectivity", Fraction, |b| {
        &mut b.optics.mirror_reflectivity
    }),
    // bias
    real("bias", "optical_power", "uW", "W", NonNegative, |b| {
        &mut b.bias.optical_power
    }),
    real("bias", "period", "us", "s", Positive, |b| {
        &mut b.bias.period
    }),
    real("bias", "on_time", "us", "s", NonNegative, |b| {
        &mut b.bias.on_time
    }),
    real("bias", "photon_time", "us", "s", NonNegative, |b| {
        &mut b.bias.photon_time
    }),
    real("bias", "probe_power", "uW", "W", NonNegative, |b| {
        &mut b.bias.probe_power
    }),
    // readout
    real(
        "readout",
        "responsivity",
        "mV_per_uW",
        "mV_per_uW",
        Positive,
        |b| &mut b.readout.responsivity_mv_per_uw,
    ),
    real("readout", "lowpass_cutoff", "MHz", "Hz", Positive, |b| {
        &mut b.readout.lowpass_cutoff
    }),
    real("readout", "threshold", "mV", "mV", Positive, |b| {
        &mut b.readout.threshold_mv
    }),
    real("readout", "min_pulse_power", "dBm", "dBm", Any, |b| {
        &mut b.readout.min_pulse_power_dbm
    }),
    // counting
    real("counting", "probe_power", "uW", "W", NonNegative, |b| {
        &mut b.counting.probe_power
    }),
    real(
        "counting",
        "responsivity",
        "mV_per_uW",
        "mV_per_uW",
        Positive,
        |b| &mut b.counting.readout.responsivity_mv_per_uw,
    ),
    real("counting", "lowpass_cutoff", "MHz", "Hz", Positive, |b| {
        &mut b.counting.readout.lowpass_cutoff
    }),
    real("counting", "threshold", "mV", "mV", Positive, |b| {
        &mut b.counting.readout.threshold_mv
    }),
    real("counting", "min_pulse_power", "dBm", "dBm", Any, |b| {
        &mut b.counting.readout.min_pulse_power_dbm
    }),
    plain("counting", "mean_photons", NonNegative, |b| {
        &mut b.counting.mean_photons
    }),
    real("counting", "pulse_time", "us", "s", NonNegative, |b| {
        &mut b.counting.pulse_time
    }),
    real("counting", "pulse_width", "us", "s", NonNegative, |b| {
        &mut b.counting.pulse_width
    }),
    real(
        "counting",
        "background_rate",
        "kHz",
        "Hz",
        NonNegative,
        |b| &mut b.counting.background_rate,
    ),
    count("counting", "n_periods", 1, |b| &mut b.counting.n_periods),
    real("counting", "bin_width", "us", "s", Positive, |b| {
        &mut b.counting.bin_width
    }),
    // sim
    real("sim", "step", "ns", "s", Positive, |b| &mut b.sim.step),
    real("sim", "sample_period", "ns", "s", Positive, |b| {
        &mut b.sim.sample_period
    }),
    count("sim", "trace_periods", 1, |b| &mut b.sim.trace_periods),
    real("sim", "settle_time", "us", "s", Positive, |b| {
        &mut b.sim.settle_time
    }),
    // loadline
    real("loadline", "optical_power", "uW", "W", Positive, |b| {
        &mut b.loadline.optical_power
    }),
    real("loadline", "r_min", "Ohm", "Ohm", Positive, |b| {
        &mut b.loadline.r_min
    }),
    real("loadline", "r_max", "Ohm", "Ohm", Positive, |b| {
        &mut b.loadline.r_max
    }),
    count("loadline", "points", 2, |b| &mut b.loadline.points),
    real("loadline", "mpp_min", "Ohm", "Ohm", Positive, |b| {
        &mut b.loadline.mpp_min
    }),
    real("loadline", "mpp_max", "Ohm", "Ohm", Positive, |b| {
        &mut b.loadline.mpp_max
    }),
    real("loadline", "compare_power", "uW", "W", Positive, |b| {
        &mut b.loadline.compare_power
    }),
    // powersweep
    real("powersweep", "p_min", "uW", "W", Positive, |b| {
        &mut b.powersweep.p_min
    }),
    real("powersweep", "p_max", "uW", "W", Positive, |b| {
        &mut b.powersweep.p_max
    }),
    count("powersweep", "points", 2, |b| &mut b.powersweep.points),
    // vpisweep
    real("vpisweep", "v_min", "V", "V", Any, |b| {
        &mut b.vpisweep.v_min
    }),
    real("vpisweep", "v_max", "V", "V", Any, |b| {
        &mut b.vpisweep.v_max
    }),
    count("vpisweep", "points", 4, |b| &mut b.vpisweep.points),
    plain("vpisweep", "noise_rms", NonNegative, |b| {
        &mut b.vpisweep.noise_rms
    }),
    // fit
    text("fit", "input", |b| &mut b.fit.input),
    real("fit", "vpi_hint", "V", "V", NonNegative, |b| {
        &mut b.fit.vpi_hint
    }),
    // fabry_perot
    text("fabry_perot", "input", |b| &mut b.fabry_perot.input),
    plain("fabry_perot", "contrast", HalfOpenUnit, |b| {
        &mut b.fabry_perot.contrast
    }),
    plain("fabry_perot", "facet_reflectivity", HalfOpenUnit, |b| {
        &mut b.fabry_perot.facet_reflectivity
    }),
    real("fabry_perot", "length", "cm", "cm", Positive, |b| {
        &mut b.fabry_perot.length
    }),
    // budget
    real("budget", "coax_heatload", "uW", "W", NonNegative, |b| {
        &mut b.budget.coax_heatload
    }),
    real("budget", "reference_total", "uW", "W", NonNegative, |b| {
        &mut b.budget.reference_total
    }),
    // run
    text("run", "scenario", |b| &mut b.run.scenario),
    count("run", "seed", 0, |b| &mut b.run.seed),
    text("run", "output", |b| &mut b.run.output),
    count("run", "threads", 0, |b| &mut b.run.threads),
];

/// Outcome of resolving a key against the schema.
pub enum Resolved {
    /// Entry plus the factors of the written and the stored unit.
    Found(&'static Entry, (f64, f64)),
    UnitMismatch {
        key: String,
        expected: &'static str,
        got: String,
    },
    Unknown,
}

/// Multiplies `v` by `from / to`, dividing by an integral ratio where that is
/// exact so that decimal inputs such as `10 ns` land on the nearest double.
pub fn convert(v: f64, from: f64, to: f64) -> f64 {
    if from == to {
        return v;
    }
    let up = from / to;
    if up >= 1.0 {
        return v * snap(up);
    }
    v / snap(to / from)
}

fn snap(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-12 * x {
        r
    } else {
        x
    }
}

pub fn resolve(key: &str) -> Resolved {
    let Some((section, rest)) = key.split_once('.') else {
        return Resolved::Unknown;
    };
    for e in ENTRIES.iter().filter(|e| e.section == section) {
        match e.slot {
            Slot::Real {
                canonical: Some(canon),
                stored,
                ..
            } => {
                let Some(suffix) = rest.strip_prefix(e.stem).and_then(|s| s.strip_prefix('_'))
                else {
                    continue;
                };
                let (want_dim, _) = unit(canon).expect("schema unit");
                let Some((dim, factor)) = unit(suffix) else {
                    continue;
                };
                if dim != want_dim {
                    return Resolved::UnitMismatch {
                        key: key.to_string(),
                        expected: canon,
                        got: suffix.to_string(),
                    };
                }
                let (_, stored_factor) = unit(stored.unwrap_or(canon)).expect("schema unit");
                return Resolved::Found(e, (factor, stored_factor));
            }
            _ if rest == e.stem => return Resolved::Found(e, (1.0, 1.0)),
            Slot::Real {
                canonical: None, ..
            } => {
                // a dimensionless key written with a unit suffix
                if let Some(suffix) = rest.strip_prefix(e.stem).and_then(|s| s.strip_prefix('_')) {
                    if unit(suffix).is_some() {
                        return Resolved::UnitMismatch {
                            key: key.to_string(),
                            expected: "(dimensionless)",
                            got: suffix.to_string(),
                        };
                    }
                }
            }
            _ => {}
        }
    }
    Resolved::Unknown
}
