use std::ffi::CStr;
use std::ptr;

use approx::assert_relative_eq;
use hmc_lab_ffi::*;

fn gaussian(eigs: &[f64]) -> *mut HmcPotential {
    let mut pot = ptr::null_mut();
    let status = unsafe { hmc_potential_gaussian(eigs.as_ptr(), eigs.len(), &mut pot) };
    assert_eq!(status, HmcStatus::Ok);
    assert!(!pot.is_null());
    pot
}

fn last_error() -> String {
    let mut buf = [0 as std::ffi::c_char; 512];
    let n = unsafe { hmc_last_error_message(buf.as_mut_ptr(), buf.len()) };
    assert!(n > 0);
    unsafe { CStr::from_ptr(buf.as_ptr()) }
        .to_string_lossy()
        .into_owned()
}

#[test]
fn value_gradient_and_bounds_match_the_quadratic() {
    let pot = gaussian(&[1.0, 4.0]);
    let q = [1.0, -0.5];
    let mut u = 0.0;
    let mut g = [0.0; 2];
    let (mut m2, mut big) = (0.0, 0.0);
    unsafe {
        assert_eq!(hmc_potential_dim(pot), 2);
        assert_eq!(
            hmc_potential_value(pot, q.as_ptr(), 2, &mut u),
            HmcStatus::Ok
        );
        assert_eq!(
            hmc_potential_gradient(pot, q.as_ptr(), 2, g.as_mut_ptr()),
            HmcStatus::Ok
        );
        assert_eq!(hmc_potential_bounds(pot, &mut m2, &mut big), HmcStatus::Ok);
        hmc_potential_free(pot);
    }
    assert_relative_eq!(u, 0.5 * 1.0 + 0.5 * 4.0 * 0.25, epsilon = 1e-15);
    assert_eq!(g, [1.0, -2.0]);
    assert_eq!((m2, big), (1.0, 4.0));
}

#[test]
fn errors_map_to_status_codes_and_messages() {
    let pot = gaussian(&[1.0]);
    let q = [0.0, 0.0];
    let mut u = 0.0;
    unsafe {
        assert_eq!(
            hmc_potential_value(pot, q.as_ptr(), 2, &mut u),
            HmcStatus::DimensionMismatch
        );
        assert!(last_error().contains("expected 1"));
        assert_eq!(
            hmc_potential_value(ptr::null(), q.as_ptr(), 1, &mut u),
            HmcStatus::NullPointer
        );
        assert!(last_error().contains("pot"));
        assert_eq!(
            hmc_potential_value(pot, q.as_ptr(), 1, ptr::null_mut()),
            HmcStatus::NullPointer
        );
        let bad = [-1.0];
        let mut other = ptr::null_mut();
        assert_eq!(
            hmc_potential_gaussian(bad.as_ptr(), 1, &mut other),
            HmcStatus::InvalidArgument
        );
        assert!(other.is_null());
        let mut states = [0.0; 2];
        let status = hmc_run_chain(
            pot,
            HmcKernelKind::Ideal,
            HmcScheme::Leapfrog,
            0.1,
            0.0,
            q.as_ptr(),
            1,
            1,
            0,
            states.as_mut_ptr(),
            ptr::null_mut(),
            ptr::null_mut(),
        );
        assert_eq!(status, HmcStatus::InvalidArgument);
        hmc_potential_free(pot);
        hmc_potential_free(ptr::null_mut());
    }
}

#[test]
fn error_message_is_truncated_to_the_buffer() {
    let q = [0.0];
    let mut u = 0.0;
    unsafe {
        assert_eq!(
            hmc_potential_value(ptr::null(), q.as_ptr(), 1, &mut u),
            HmcStatus::NullPointer
        );
        let mut buf = [1 as std::ffi::c_char; 5];
        let full = hmc_last_error_message(buf.as_mut_ptr(), buf.len());
        assert!(full > 4);
        assert_eq!(buf[4], 0);
        assert_eq!(CStr::from_ptr(buf.as_ptr()).to_bytes().len(), 4);
    }
}

#[test]
fn chain_through_the_abi_matches_the_library() {
    let pot = gaussian(&[1.0, 4.0]);
    let x0 = [0.5, -0.5];
    let steps = 50;
    let mut states = vec![0.0; (steps + 1) * 2];
    let (mut accepted, mut grads) = (0u64, 0u64);
    let status = unsafe {
        hmc_run_chain(
            pot,
            HmcKernelKind::Metropolis,
            HmcScheme::Leapfrog,
            0.01,
            0.0,
            x0.as_ptr(),
            2,
            steps,
            42,
            states.as_mut_ptr(),
            &mut accepted,
            &mut grads,
        )
    };
    assert_eq!(status, HmcStatus::Ok);
    unsafe { hmc_potential_free(pot) };

    let lib_pot = hmc_lab::potentials::Gaussian::new(vec![1.0, 4.0]).unwrap();
    let t = hmc_lab::Potential::bounds(&lib_pot).default_time();
    let spec = hmc_lab::KernelSpec::metropolis(hmc_lab::IntegratorSpec::leapfrog(0.01, t).unwrap())
        .unwrap();
    let trace = hmc_lab::kernels::run_chain(&lib_pot, &spec, &x0, steps, 42).unwrap();
    let flat: Vec<f64> = trace.states.concat();
    assert_eq!(states, flat);
    assert_eq!(accepted, trace.ledger.accepted);
    assert_eq!(grads, trace.ledger.gradient_evals);
}

#[test]
fn wasserstein_entry_points_agree_in_one_dimension() {
    let a = [0.0, 1.0, 3.0];
    let b = [2.0, -1.0, 0.5];
    let (mut exact, mut assign) = (0.0, 0.0);
    unsafe {
        assert_eq!(
            hmc_w1_exact_1d(a.as_ptr(), b.as_ptr(), 3, &mut exact),
            HmcStatus::Ok
        );
        assert_eq!(
            hmc_w1_assignment(a.as_ptr(), b.as_ptr(), 3, 1, &mut assign),
            HmcStatus::Ok
        );
    }
    assert_relative_eq!(exact, (1.0 + 0.5 + 1.0) / 3.0, epsilon = 1e-15);
    assert_relative_eq!(exact, assign, epsilon = 1e-12);
}

#[test]
fn certificate_passes_on_a_gaussian() {
    let pot = gaussian(&[1.0, 4.0]);
    let mut cert = HmcCertificate::default();
    let status = unsafe { hmc_contraction_certificate(pot, 0.0, 50, 3, 1e-10, &mut cert) };
    unsafe { hmc_potential_free(pot) };
    assert_eq!(status, HmcStatus::Ok);
    assert_eq!(cert.trials, 50);
    assert!(cert.pass);
    assert!(cert.worst_ratio <= cert.contraction + 1e-6);
}

#[test]
fn generated_header_declares_every_entry_point() {
    let header =
        std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/hmc_lab.h")).unwrap();
    for name in [
        "hmc_last_error_message",
        "hmc_potential_gaussian",
        "hmc_potential_perturbed",
        "hmc_potential_free",
        "hmc_potential_dim",
        "hmc_potential_bounds",
        "hmc_potential_value",
        "hmc_potential_gradient",
        "hmc_run_chain",
        "hmc_w1_exact_1d",
        "hmc_w1_assignment",
        "hmc_contraction_certificate",
        "typedef struct HmcPotential HmcPotential",
        "HMC_STATUS_DIMENSION_MISMATCH = 3",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}

#[test]
fn c_program_links_against_the_static_library() {
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let manifest = std::path::Path::new(env!("CARGO_MANIFEST_DIR"));
    let deps = std::env::current_exe()
        .unwrap()
        .parent()
        .unwrap()
        .to_path_buf();
    let lib = deps.parent().unwrap().join("libhmc_lab_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built; skipping", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let status = std::process::Command::new(cc)
        .arg(manifest.join("tests/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");
    let out = std::process::Command::new(&exe).output().unwrap();
    assert!(
        out.status.success(),
        "smoke program exited with {:?}",
        out.status.code()
    );
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "ok");
}

fn which_cc() -> Result<&'static str, ()> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| {
            std::process::Command::new(c)
                .arg("--version")
                .output()
                .is_ok_and(|o| o.status.success())
        })
        .ok_or(())
}
