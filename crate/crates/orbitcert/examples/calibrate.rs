use orbitcert::interval::{IBox, Interval};
use orbitcert::poincare::*;
use orbitcert::rossler::*;

fn main() {
    let case = builtin_case("4.7").unwrap();
    let field = case.field().unwrap();
    let section = SectionDef::rossler_default();
    let policy = PoincarePolicy {
        trust: Some(case.trust_region.clone()),
        ..PoincarePolicy::default()
    };
    let spec = case.grid_spec().unwrap();
    let cube5 = &spec.cubes[4];
    let cube1 = &spec.cubes[0];
    let outer = &spec.outer;

    let u = IBox(vec![
        Interval::new(-1.17e-3, -1.125e-3),
        Interval::new(-7.44e-4, -7.2075e-4),
    ]);
    let ambient = cube5.from_model_box(&u);
    println!("ambient box: {:?}", ambient);
    // clip against outer
    let u_out = outer.to_model_coords(&ambient).unwrap();
    println!("outer-model coords: {:?}", u_out);
    println!("outer model box: {:?}", outer.model_box());
    let u_in = u_out.intersect(&outer.model_box());
    match u_in {
        None => println!("SKIPPED (outside G)"),
        Some(ui) => {
            let back = outer.from_model_box(&ui);
            let cut = ambient.intersect(&back).unwrap();
            println!("clipped ambient: {:?}", cut);
            match poincare_image(&section, &field, &cut, &policy) {
                Ok(ret) => {
                    let u1 = cube1.to_model_coords(&ret.image).unwrap();
                    let ug = outer.to_model_coords(&ret.image).unwrap();
                    println!("image: {:?}", ret.image);
                    println!("in cube1 model: {:?} (radii {:?})", u1, cube1.radii);
                    println!("  margin(cube1) = {:.3e}", cube1.interior_margin_model(&u1));
                    println!("  margin(outer) = {:.3e}", outer.interior_margin_model(&ug));
                }
                Err(e) => println!("eval failed: {e}"),
            }
        }
    }
}
