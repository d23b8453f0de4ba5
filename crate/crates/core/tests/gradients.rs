mod common;

use common::grads;
use epsnet::models::ArchitectureKind;

const TOLERANCE: f64 = 1e-5;

fn assert_close(name: &str, report: epsnet::nn::GradCheckReport) {
    assert!(report.elements_checked > 0);
    assert!(
        report.max_relative_error < TOLERANCE,
        "{name}: relative error {:.3e} at {}[{}]",
        report.max_relative_error,
        report.worst_parameter,
        report.worst_index
    );
}

#[test]
fn dense_stack() {
    assert_close("dense", grads::dense().unwrap());
}

#[test]
fn lstm_three_steps() {
    assert_close("lstm", grads::lstm().unwrap());
}

#[test]
fn tcn_two_blocks() {
    assert_close("tcn", grads::tcn().unwrap());
}

#[test]
fn full_lstm_network() {
    assert_close("lstm network", grads::full(ArchitectureKind::Lstm, 4).unwrap());
}

#[test]
fn full_tcn_network() {
    assert_close("tcn network", grads::full(ArchitectureKind::Tcn, 4).unwrap());
}
