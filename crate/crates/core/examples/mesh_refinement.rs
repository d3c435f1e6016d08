//! Builds the structured unit square and cube, refines them uniformly and
//! round-trips the text mesh format.

use nsvoigt::mesh::{BoxDomain, Mesh};

fn main() -> nsvoigt::Result<()> {
    for dim in [2, 3] {
        let mut mesh = Mesh::build_structured(&BoxDomain::unit(dim), 2)?;
        println!("{dim}D  level  cells  h          shape      volume");
        for level in 0..3 {
            let q = mesh.quality();
            println!(
                "    {level:>5}  {:>5}  {:.4e}  {:.4e}  {:.15}",
                mesh.n_cells(),
                mesh.h(),
                q.shape_regularity,
                q.volume
            );
            mesh = mesh.refine_uniform();
        }
        let path = std::env::temp_dir().join(format!("nsvoigt_example_{dim}d.mesh"));
        mesh.save(&path)?;
        let back = Mesh::load(&path)?;
        assert_eq!(back.to_text(), mesh.to_text());
        println!("    saved and reloaded {} ({} vertices)\n", path.display(), back.n_vertices());
    }
    Ok(())
}
