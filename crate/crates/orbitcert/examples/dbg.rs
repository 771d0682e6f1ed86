use orbitcert::interval::{IBox, Interval};
use orbitcert::polyfield::PolyField;
fn main() {
    let field = PolyField::from_decimal_terms(
        2,
        &[
            vec![("-1.25", vec![3, 0]), ("2.25", vec![2, 0]), ("1", vec![0, 0])],
            vec![("0.1", vec![0, 1])],
        ],
    ).unwrap();
    // full cube 2 box
    let x = IBox(vec![Interval::new(1.0-0.0125, 1.0+0.0125), Interval::new(-0.08, 0.08)]);
    println!("image of cube2: {:?}", field.eval(&x));
    // a deep sub-box at the right edge
    let w = 0.025/4096.0;
    let x = IBox(vec![Interval::new(1.0125-w, 1.0125), Interval::new(-0.08, 0.08)]);
    println!("image of right-edge sliver: {:?}", field.eval(&x));
    println!("target cube3: x in (2-0.0105, 2+0.0105) = ({}, {})", 2.0-0.0105, 2.0+0.0105);
    // and cube 1 (x=0) into cube 2
    let x = IBox(vec![Interval::new(-0.07, 0.07), Interval::new(-0.08, 0.08)]);
    println!("image of cube1: {:?}", field.eval(&x));
    let x = IBox(vec![Interval::new(0.07-w, 0.07), Interval::new(-0.08, 0.08)]);
    println!("image of cube1 right sliver: {:?}", field.eval(&x));
}
