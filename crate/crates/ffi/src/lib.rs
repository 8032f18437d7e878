//! C ABI for the `polariton` library.
//!
//! Every function returns a [`PolaritonStatus`]; results come back through
//! out-pointers. On failure a message is kept per thread and can be read
//! with [`polariton_last_error`]. Handles are opaque and must be released
//! with their matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use num_traits::ToPrimitive;

use polariton::basis::enumerate_basis;
use polariton::combinatorics::{
    dark_polariton_ratio_exact, dark_state_count, rabi_splitting, ratio_to_f64, relative_rabi,
};
use polariton::config::{OutputKind, ScenarioConfig};
use polariton::dynamics::PopulationTrajectory;
use polariton::operators::{build_hamiltonian, build_observables};
use polariton::scenario::run_scenario;
use polariton::spectrum::{
    classify_eigenstates, diagonalize_manifolds, EigenstateRecord, Group, Tolerances,
};
use polariton::{Error, ModelParameters, Spin};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PolaritonStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Numerical = 4,
    Io = 5,
    Overflow = 6,
    OutOfRange = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PolaritonGroup {
    Ground = 0,
    Dark = 1,
    MultiPolariton = 2,
    DarkPolariton = 3,
    Unclassified = 4,
}

impl From<Group> for PolaritonGroup {
    fn from(g: Group) -> Self {
        match g {
            Group::Ground => PolaritonGroup::Ground,
            Group::Dark => PolaritonGroup::Dark,
            Group::MultiPolariton => PolaritonGroup::MultiPolariton,
            Group::DarkPolariton => PolaritonGroup::DarkPolariton,
            Group::Unclassified => PolaritonGroup::Unclassified,
        }
    }
}

/// Model parameters in eV.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct PolaritonParameters {
    pub n_molecules: u32,
    pub omega_eg: f64,
    pub omega_c: f64,
    pub g_c: f64,
    pub omega_tg: f64,
    pub c_et: f64,
}

/// One classified eigenstate. `s_doubled` is 2S, or -1 when S is not a
/// good quantum number.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct PolaritonEigenstate {
    pub eigenvalue: f64,
    pub relative_shift: f64,
    pub n_exc: u32,
    pub photon_frac: f64,
    pub t_frac: f64,
    pub s_doubled: i32,
    pub group: PolaritonGroup,
}

impl From<&EigenstateRecord> for PolaritonEigenstate {
    fn from(r: &EigenstateRecord) -> Self {
        Self {
            eigenvalue: r.eigenvalue,
            relative_shift: r.relative_shift,
            n_exc: r.n_exc,
            photon_frac: r.photon_frac,
            t_frac: r.t_frac,
            s_doubled: r.s.map_or(-1, |s| s.doubled() as i32),
            group: r.group.into(),
        }
    }
}

/// Classified spectrum.
pub struct PolaritonSpectrum {
    records: Vec<EigenstateRecord>,
}

/// Population trajectory.
pub struct PolaritonTrajectory {
    inner: PopulationTrajectory,
    names: Vec<Vec<u8>>,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> PolaritonStatus {
    if e.is_numerical() {
        PolaritonStatus::Numerical
    } else {
        match e {
            Error::Config(_) | Error::Parse(_) => PolaritonStatus::Config,
            Error::Io(_) => PolaritonStatus::Io,
            _ => PolaritonStatus::InvalidArgument,
        }
    }
}

fn fail(status: PolaritonStatus, msg: impl Into<String>) -> PolaritonStatus {
    set_error(msg.into());
    status
}

fn guard<F: FnOnce() -> PolaritonStatus>(f: F) -> PolaritonStatus {
    set_error(String::new());
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(PolaritonStatus::Panic, "internal panic"),
    }
}

macro_rules! try_lib {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(err) => return fail(status_of(&err), err.to_string()),
        }
    };
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            return fail(PolaritonStatus::NullPointer, concat!("`", stringify!($p), "` is null"));
        })+
    };
}

/// Copies the last error message of this thread into `buf` (NUL
/// terminated, truncated to `len`). Returns the full message length in
/// bytes, excluding the terminator.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn polariton_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn polariton_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Resonant defaults for `n_molecules`: cavity and transition at 4.3 eV,
/// collective coupling 0.5 eV, `t` at 3.9 eV with `c_et` = 0.05 eV.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn polariton_default_parameters(
    n_molecules: u32,
    out: *mut PolaritonParameters,
) -> PolaritonStatus {
    guard(|| {
        non_null!(out);
        if n_molecules == 0 {
            return fail(PolaritonStatus::InvalidArgument, "n_molecules must be positive");
        }
        let p = ModelParameters::resonant_defaults(n_molecules as usize);
        *out = PolaritonParameters {
            n_molecules,
            omega_eg: p.omega_eg,
            omega_c: p.omega_c,
            g_c: p.g_c,
            omega_tg: p.omega_tg,
            c_et: p.c_et,
        };
        PolaritonStatus::Ok
    })
}

/// Diagonalizes the model (`levels` 2 or 3) up to `n_max` excitations and
/// classifies every eigenstate.
///
/// # Safety
/// `params` must be valid for reads and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn polariton_spectrum_new(
    params: *const PolaritonParameters,
    levels: u8,
    n_max: u32,
    out: *mut *mut PolaritonSpectrum,
) -> PolaritonStatus {
    guard(|| {
        non_null!(params, out);
        let p = &*params;
        let model = ModelParameters {
            n_molecules: p.n_molecules as usize,
            omega_eg: p.omega_eg,
            omega_c: p.omega_c,
            g_c: p.g_c,
            omega_tg: p.omega_tg,
            c_et: p.c_et,
        };
        try_lib!(model.validate());
        let basis = try_lib!(enumerate_basis(model.n_molecules, levels, n_max));
        let h = try_lib!(build_hamiltonian(&model, &basis));
        let obs = try_lib!(build_observables(&basis));
        let eig = try_lib!(diagonalize_manifolds(&h, &basis));
        let spec = try_lib!(classify_eigenstates(
            eig,
            &obs,
            model.omega_eg,
            &Tolerances::default()
        ));
        *out = Box::into_raw(Box::new(PolaritonSpectrum {
            records: spec.records,
        }));
        PolaritonStatus::Ok
    })
}

/// Number of eigenstates, or 0 for a null handle.
///
/// # Safety
/// `spectrum` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn polariton_spectrum_len(spectrum: *const PolaritonSpectrum) -> usize {
    spectrum.as_ref().map_or(0, |s| s.records.len())
}

/// # Safety
/// `spectrum` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn polariton_spectrum_get(
    spectrum: *const PolaritonSpectrum,
    index: usize,
    out: *mut PolaritonEigenstate,
) -> PolaritonStatus {
    guard(|| {
        non_null!(spectrum, out);
        let spectrum = &*spectrum;
        match spectrum.records.get(index) {
            Some(r) => {
                *out = r.into();
                PolaritonStatus::Ok
            }
            None => fail(PolaritonStatus::OutOfRange, format!("index {index} out of range")),
        }
    })
}

/// # Safety
/// `spectrum` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn polariton_spectrum_free(spectrum: *mut PolaritonSpectrum) {
    if !spectrum.is_null() {
        drop(Box::from_raw(spectrum));
    }
}

/// Runs the dynamics described by a TOML scenario document (same schema
/// as the command line tool). Nothing is written to disk.
///
/// # Safety
/// `config_toml` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn polariton_trajectory_run(
    config_toml: *const c_char,
    out: *mut *mut PolaritonTrajectory,
) -> PolaritonStatus {
    guard(|| {
        non_null!(config_toml, out);
        let text = match CStr::from_ptr(config_toml).to_str() {
            Ok(t) => t,
            Err(e) => return fail(PolaritonStatus::Config, format!("config is not UTF-8: {e}")),
        };
        let mut config = try_lib!(ScenarioConfig::from_toml(text));
        config.outputs = vec![OutputKind::Trajectory];
        let outcome = try_lib!(run_scenario(&config, None));
        let inner = outcome.trajectory.expect("trajectory requested");
        let names = inner
            .groups
            .keys()
            .map(|k| {
                let mut v = k.to_string().into_bytes();
                v.push(0);
                v
            })
            .collect();
        *out = Box::into_raw(Box::new(PolaritonTrajectory { inner, names }));
        PolaritonStatus::Ok
    })
}

/// Number of samples, or 0 for a null handle.
///
/// # Safety
/// `traj` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn polariton_trajectory_samples(traj: *const PolaritonTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.inner.times.len())
}

/// Number of population groups, or 0 for a null handle.
///
/// # Safety
/// `traj` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn polariton_trajectory_groups(traj: *const PolaritonTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.names.len())
}

/// Column name of group `index` (for example `N3_dark`), valid until the
/// handle is freed.
///
/// # Safety
/// `traj` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn polariton_trajectory_group_name(
    traj: *const PolaritonTrajectory,
    index: usize,
) -> *const c_char {
    traj.as_ref()
        .and_then(|t| t.names.get(index))
        .map_or(ptr::null(), |n| n.as_ptr() as *const c_char)
}

/// Series selectors for [`polariton_trajectory_series`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PolaritonSeries {
    Time = 0,
    Group = 1,
    Purity = 2,
    PhotonNumber = 3,
    ENumber = 4,
    TNumber = 5,
    ExcitationNumber = 6,
}

/// Copies one series (a [`PolaritonSeries`] value) into `buf`, which must
/// hold `polariton_trajectory_samples` values. `group` is only read for
/// `POLARITON_SERIES_GROUP`.
///
/// # Safety
/// `traj` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn polariton_trajectory_series(
    traj: *const PolaritonTrajectory,
    series: u32,
    group: usize,
    buf: *mut f64,
    len: usize,
) -> PolaritonStatus {
    guard(|| {
        non_null!(traj, buf);
        let t = &(*traj).inner;
        let data: &[f64] = match series {
            s if s == PolaritonSeries::Time as u32 => &t.times,
            s if s == PolaritonSeries::Group as u32 => match t.groups.values().nth(group) {
                Some(v) => v,
                None => {
                    return fail(PolaritonStatus::OutOfRange, format!("group {group} out of range"))
                }
            },
            s if s == PolaritonSeries::Purity as u32 => &t.purity,
            s if s == PolaritonSeries::PhotonNumber as u32 => &t.n_phot,
            s if s == PolaritonSeries::ENumber as u32 => &t.n_e,
            s if s == PolaritonSeries::TNumber as u32 => &t.n_t,
            s if s == PolaritonSeries::ExcitationNumber as u32 => &t.n_exc,
            other => return fail(PolaritonStatus::InvalidArgument, format!("unknown series {other}")),
        };
        if len < data.len() {
            return fail(
                PolaritonStatus::OutOfRange,
                format!("buffer holds {len} values, {} needed", data.len()),
            );
        }
        ptr::copy_nonoverlapping(data.as_ptr(), buf, data.len());
        PolaritonStatus::Ok
    })
}

/// # Safety
/// `traj` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn polariton_trajectory_free(traj: *mut PolaritonTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Number of dark states with `n_x` excitations among `n` molecules.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn polariton_dark_state_count(n: u64, n_x: u64, out: *mut u64) -> PolaritonStatus {
    guard(|| {
        non_null!(out);
        let count = try_lib!(dark_state_count(n, n_x));
        match count.to_u64() {
            Some(v) => {
                *out = v;
                PolaritonStatus::Ok
            }
            None => fail(PolaritonStatus::Overflow, format!("count {count} exceeds 64 bits")),
        }
    })
}

/// Ratio of dark-polariton progenitors in sector `s_doubled / 2` to the
/// dark states of manifold `n_x`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn polariton_dark_polariton_ratio(
    n: u64,
    n_x: u64,
    s_doubled: u32,
    out: *mut f64,
) -> PolaritonStatus {
    guard(|| {
        non_null!(out);
        let r = try_lib!(dark_polariton_ratio_exact(n, n_x, Spin::from_doubled(s_doubled)));
        *out = ratio_to_f64(&r);
        PolaritonStatus::Ok
    })
}

/// Rabi splitting in eV for coupling `g_c`, cooperation number
/// `s_doubled / 2` and detuning `delta`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn polariton_rabi_splitting(
    g_c: f64,
    s_doubled: u32,
    delta: f64,
    out: *mut f64,
) -> PolaritonStatus {
    guard(|| {
        non_null!(out);
        *out = try_lib!(rabi_splitting(g_c, Spin::from_doubled(s_doubled), delta));
        PolaritonStatus::Ok
    })
}

/// Splitting of the lowest dark-polariton sector relative to the
/// symmetric one at relative excitation `c`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn polariton_relative_rabi(c: f64, out: *mut f64) -> PolaritonStatus {
    guard(|| {
        non_null!(out);
        *out = try_lib!(relative_rabi(c));
        PolaritonStatus::Ok
    })
}
