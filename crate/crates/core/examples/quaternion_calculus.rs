// Log/exp maps, the hemisphere convention and the product derivatives.

use mapfuse::quat::{dquatmul_left, dquatmul_right, quat_exp, quat_log, LogQuaternion, UnitQuaternion};
use nalgebra::Vector3;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    // 90° about z: the log has half the angle as its norm
    let q = UnitQuaternion::from_axis_angle(&Vector3::z(), std::f64::consts::FRAC_PI_2);
    let w = quat_log(&q);
    println!("q = {:?}", q.to_vector4().as_slice());
    println!("log q = {:?}  (norm {:.6})", w.0.as_slice(), w.norm());

    // q and −q are the same rotation and share one log
    assert_eq!(quat_log(&q.negated()), w);

    let back = quat_exp(&w);
    println!("exp log q − q = {:.1e}", (back.to_vector4() - q.to_vector4()).amax());

    let b = quat_exp(&LogQuaternion::new(0.1, -0.2, 0.3));
    let ab = (q * b).to_vector4();
    let left = dquatmul_left(&q) * b.to_vector4();
    let right = dquatmul_right(&b) * q.to_vector4();
    println!("a·b = L(a) b = R(b) a: {:.1e}, {:.1e}", (ab - left).amax(), (ab - right).amax());

    let t = Vector3::new(1.0, 2.0, 3.0);
    println!("rotate {:?} -> {:?}", t.as_slice(), q.rotate(&t).as_slice());
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
