//! Drives the kinematic bicycle around the built-in loop with a pure
//! pursuit-style law and prints where it ends up after each lap.

use wsimplex::sim::{Calibration, SpeedDuty, Track, VehicleModel, VehicleState};

fn main() {
    let track = Track::default_loop();
    let cal = Calibration::default();
    let model = VehicleModel::default();
    let speed = SpeedDuty::new(15.61).expect("inside the duty band");
    let mut st = VehicleState::on_centerline(&track, 0.0, cal.duty_to_speed(speed));
    let dt = 0.02;
    let mut travelled = 0.0;
    let mut lap = 1;
    println!("track length {:.3} m, {} segments", track.length(), track.segment_count());
    while lap <= 3 {
        let law = 15.0 + 10.0 * st.lateral_offset + 10.0 * st.preview_heading_error(&track, 0.3);
        let steer = cal.steering_deg_to_duty(cal.duty_to_steering_deg(wsimplex::sim::SteerDuty::clamped(law)));
        let before = st.arc_position;
        st = model.step(&track, &st, steer, speed, dt, &cal);
        let mut ds = st.arc_position - before;
        if ds < -track.length() / 2.0 {
            ds += track.length();
        }
        travelled += ds;
        if travelled >= lap as f64 * track.length() {
            println!(
                "lap {lap}: t={:.2}s  pos=({:.3}, {:.3})  offset={:+.4} m",
                st.time, st.x, st.y, st.lateral_offset
            );
            lap += 1;
        }
    }
}
