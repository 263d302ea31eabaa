//! Entropies and conditional mutual information on a small joint table.

use icckit::prob::{Factor, JointPmf};
use icckit::VarId;

fn main() -> icckit::Result<()> {
    // A -> B through a binary symmetric channel with crossover 0.1, C independent.
    let a = VarId::new("A", 2);
    let b = VarId::new("B", 2);
    let c = VarId::new("C", 3);
    let p = icckit::prob::compose_factors(&[
        Factor::marginal(a.clone(), vec![0.5, 0.5]),
        Factor::conditional(b, vec![a], vec![0.9, 0.1, 0.1, 0.9]),
        Factor::marginal(c, vec![0.5, 0.25, 0.25]),
    ])?;

    println!("H(A)     = {:.6}", p.entropy(&["A"])?);
    println!("H(C)     = {:.6}", p.entropy(&["C"])?);
    println!("H(B|A)   = {:.6}", p.cond_entropy(&["B"], &["A"])?);
    println!("I(A;B)   = {:.6}", p.cond_mutual_info(&["A"], &["B"], &[])?);
    println!("I(A;B|C) = {:.6}", p.cond_mutual_info(&["A"], &["B"], &["C"])?);
    println!("I(A;C)   = {:.6}", p.cond_mutual_info(&["A"], &["C"], &[])?);

    let ab: JointPmf = p.marginalize(&["A", "B"])?;
    println!("p(A,B)   = {:?}", ab.mass());
    Ok(())
}
