//! Write reformulations as LP and MPS files and read an LP file back.

use bilevel::export::{export_model, read_lp, ExportFormat};
use bilevel::kkt::build_kkt;
use bilevel::reformulate::{reformulate, Mode};
use bilevel::svr::{build_bilevel, generate_instance};

fn main() {
    let dir = std::env::args()
        .nth(1)
        .map(std::path::PathBuf::from)
        .unwrap_or_else(std::env::temp_dir);
    let inst = generate_instance(10, 2, 42, 0.1).unwrap();
    let sm = build_bilevel(&inst);
    let kkt = build_kkt(&sm.model).unwrap();

    let modes = [
        Mode::Sos1,
        Mode::BigM {
            primal_m: 100.0,
            dual_m: 100.0,
        },
    ];
    for mode in modes {
        let info = reformulate(&sm.model, &kkt, mode, None).unwrap();
        for format in [ExportFormat::Lp, ExportFormat::Mps] {
            let path = dir.join(format!("10_02_{mode}.{}", format.extension()));
            export_model(&info.slm, format, &path).unwrap();
            println!("wrote {}", path.display());
        }
        let lp_path = dir.join(format!("10_02_{mode}.lp"));
        let back = read_lp(&std::fs::read_to_string(&lp_path).unwrap()).unwrap();
        println!(
            "  {mode}: {} vars, {} rows, {} binaries, {} SOS1 sets (re-read {} / {} / {} / {})",
            info.slm.num_variables(),
            info.slm.linear.len(),
            info.slm.num_binaries(),
            info.slm.sos1.len(),
            back.num_variables(),
            back.linear.len(),
            back.num_binaries(),
            back.sos1.len()
        );
    }
}
