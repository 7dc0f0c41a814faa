"""Compliant-arm quadrotor simulation: dynamics, arm fitting, drops, RL and scenarios."""

from ._core import (
    ArmParams,
    ContractError,
    IoError,
    NumericalError,
    ParseError,
    VehicleParams,
    __version__,
    cli,
    config_hash,
    config_keys,
    drop_test,
    evaluate,
    fit_arm,
    hover_command,
    motor_thrust,
    release_recovery,
    resolved_config,
    run_scenario,
    simulate,
    train,
)

__all__ = [
    "ArmParams",
    "ContractError",
    "IoError",
    "NumericalError",
    "ParseError",
    "VehicleParams",
    "__version__",
    "cli",
    "config_hash",
    "config_keys",
    "drop_test",
    "evaluate",
    "fit_arm",
    "hover_command",
    "motor_thrust",
    "release_recovery",
    "resolved_config",
    "run_scenario",
    "simulate",
    "train",
]
