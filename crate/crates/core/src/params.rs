//! The full parameter bundle a scenario runs with.

use serde::{Deserialize, Serialize};

use crate::circuit::{DeviceParams, IntegrationSettings, OpticalDrive, ReadoutParams};
use crate::error::{Result, SimError};
use crate::modulator::{ModulatorParams, OpticalBudget};
use crate::photodiode::PhotodiodeParams;
use crate::snspd::NanowireParams;
use crate::stats::{CountingSetup, PhotonSource};

/// Optical bias and readout-probe waveform of the trace experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct BiasSettings {
    /// W
    pub optical_power: f64,
    /// s
    pub period: f64,
    /// s
    pub on_time: f64,
    /// s, photon arrival in the single-trace experiment.
    pub photon_time: f64,
    /// W
    pub probe_power: f64,
}

/// Photon-counting experiment settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct CountingSettings {
    /// W, reduced modulator probe used for click detection.
    pub probe_power: f64,
    /// Click receiver.
    pub readout: ReadoutParams,
    pub mean_photons: f64,
    /// s
    pub pulse_time: f64,
    /// s, rms spread of the signal photon arrival time.
    pub pulse_width: f64,
    /// 1/s, background events while biased.
    pub background_rate: f64,
    pub n_periods: u64,
    /// s
    pub bin_width: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct SimSettings {
    /// s
    pub step: f64,
    /// s
    pub sample_period: f64,
    pub trace_periods: u64,
    /// s, constant-drive integration used to confirm the equilibrium.
    pub settle_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct LoadlineSettings {
    /// W
    pub optical_power: f64,
    /// Ω
    pub r_min: f64,
    /// Ω
    pub r_max: f64,
    pub points: u64,
    /// Ω
    pub mpp_min: f64,
    /// Ω
    pub mpp_max: f64,
    /// W, second illumination used to report the MPP shift.
    pub compare_power: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct PowerSweepSettings {
    /// W
    pub p_min: f64,
    /// W
    pub p_max: f64,
    pub points: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct VpiSweepSettings {
    /// V
    pub v_min: f64,
    /// V
    pub v_max: f64,
    pub points: u64,
    /// Additive Gaussian noise, relative to the sweep maximum.
    pub noise_rms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct FitSettings {
    /// CSV with `x,y[,weight]`; empty means fit the scenario's own sweep.
    pub input: String,
    /// V, initial half-wave voltage guess; 0 selects the multi-start grid.
    pub vpi_hint: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct FabryPerotSettings {
    /// CSV of fringe intensities (`x,y`); empty means use `contrast`.
    pub input: String,
    pub contrast: f64,
    pub facet_reflectivity: f64,
    /// cm
    pub length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct BudgetSettings {
    /// W, passive heat load of a coaxial readout line (0 when all-optical).
    pub coax_heatload: f64,
    /// W, headline figure the computed total is reported beside.
    pub reference_total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct RunSettings {
    pub scenario: String,
    pub seed: u64,
    pub output: String,
    /// Worker threads; 0 uses all cores.
    pub threads: u64,
}

/// Every tunable value of the simulator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ParamBundle {
    pub photodiode: PhotodiodeParams,
    pub nanowire: NanowireParams,
    pub modulator: ModulatorParams,
    pub optics: OpticalBudget,
    pub bias: BiasSettings,
    pub readout: ReadoutParams,
    pub counting: CountingSettings,
    pub sim: SimSettings,
    pub loadline: LoadlineSettings,
    pub powersweep: PowerSweepSettings,
    pub vpisweep: VpiSweepSettings,
    pub fit: FitSettings,
    pub fabry_perot: FabryPerotSettings,
    pub budget: BudgetSettings,
    pub run: RunSettings,
}

impl ParamBundle {
    pub fn device(&self) -> DeviceParams {
        DeviceParams {
            photodiode: self.photodiode,
            nanowire: self.nanowire,
            modulator: self.modulator,
        }
    }

    /// Drive of the single-trace experiment.
    pub fn trace_drive(&self) -> OpticalDrive {
        OpticalDrive {
            bias_power: self.bias.optical_power,
            period: self.bias.period,
            on_time: self.bias.on_time,
            signal_photon_times: vec![self.bias.photon_time],
            probe_power: self.bias.probe_power,
        }
    }

    /// Drive of the counting experiment; photons come from [`Self::photon_source`].
    pub fn counting_drive(&self) -> OpticalDrive {
        OpticalDrive {
            bias_power: self.bias.optical_power,
            period: self.bias.period,
            on_time: self.bias.on_time,
            signal_photon_times: Vec::new(),
            probe_power: self.counting.probe_power,
        }
    }

    pub fn photon_source(&self) -> PhotonSource {
        PhotonSource {
            mean_photons_per_pulse: self.counting.mean_photons,
            pulse_time_in_period: self.counting.pulse_time,
            pulse_width: self.counting.pulse_width,
            background_rate: self.counting.background_rate,
        }
    }

    pub fn counting_setup(&self) -> CountingSetup {
        CountingSetup {
            readout: self.counting.readout,
            step: self.sim.step,
        }
    }

    pub fn integration(&self) -> IntegrationSettings {
        IntegrationSettings {
            step: self.sim.step,
            sample_period: self.sim.sample_period,
        }
    }

    /// Histogram bin edges spanning one drive period.
    pub fn bin_edges(&self) -> Vec<f64> {
        let n = (self.bias.period / self.counting.bin_width)
            .round()
            .max(1.0) as usize;
        (0..=n)
            .map(|i| i as f64 * self.bias.period / n as f64)
            .collect()
    }

    /// Cross-field checks on top of the per-key constraints.
    pub fn validate(&self) -> Result<()> {
        self.device().validate()?;
        self.optics.validate()?;
        self.readout.validate()?;
        self.counting.readout.validate()?;
        self.trace_drive().validate()?;
        self.photon_source().validate(self.bias.period)?;
        if self.sim.sample_period < self.sim.step {
            return Err(SimError::domain("sim.sample_period must be >= sim.step"));
        }
        if self.loadline.r_min >= self.loadline.r_max
            || self.loadline.mpp_min >= self.loadline.mpp_max
        {
            return Err(SimError::domain("resistance ranges must be increasing"));
        }
        if self.powersweep.p_min >= self.powersweep.p_max {
            return Err(SimError::domain("powersweep range must be increasing"));
        }
        if self.vpisweep.v_min >= self.vpisweep.v_max {
            return Err(SimError::domain("vpisweep range must be increasing"));
        }
        Ok(())
    }
}
