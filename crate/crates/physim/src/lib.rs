//! Deterministic 2D rigid-body toy simulator for two contact-rich
//! manipulation tasks: block-insertion (press a block into a slot between
//! two fixtures) and latch-door (turn a sprung handle past its latch, then
//! swing the door open).
//!
//! Bodies are rectangles integrated with semi-implicit Euler at 100 Hz;
//! contact is a penalty spring-damper on penetrating corners with viscous
//! tangential friction; the latch linkage uses penalty pin joints. Sensing
//! produces 32×32 intensity + depth grids, gripper pose/velocity, and a
//! 32-step force/torque window. Everything is a plain value: cloning a state
//! and stepping it elsewhere is exact restoration.

mod body;
mod contact;
mod demo;
mod env;
mod error;
mod expert;
mod io;
pub mod math;
mod render;
mod sense;

pub use body::{Accum, Body};
pub use contact::{
    contact_force, find_contacts, penalty_force, Contact, C_FRICTION, K_D, K_P, MAX_PENETRATION,
};
pub use demo::{record_demo, record_demo_with_plan, DemoStep, Demonstration, RecordOptions};
pub use env::{
    insertion_depth, step_env, success, Action, EnvKind, EnvState, Wrench, DAMP_ANG, DAMP_LIN, DT,
    INSERT_THRESHOLD, K_V, LATCH_THRESHOLD, OPEN_THRESHOLD, SLOT_DEPTH, SLOT_HALF_WIDTH, SLOT_TOP,
};
pub use error::PhysimError;
pub use expert::{default_plan, ScriptedExpert, Waypoint};
pub use io::{demo_from_bytes, demo_to_bytes, load_demo, save_demo};
pub use render::{cell_center, cell_of, render, view, Grid, GRID};
pub use sense::{sense, Observation, WrenchWindow, OBS_LEN, WINDOW, WRENCH_CHANNELS};
