//! Model directories: `model.txt` index, core tensor, one CSV per factor.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use ontd_core::{FactorMatrix, ModeFactor, OntdModel};

use crate::config::parse_list;
use crate::error::{CliError, Result};
use crate::formats::{read_matrix_csv, read_tensor, write_matrix_csv, write_tensor, TensorFormat};

pub const INDEX_FILE: &str = "model.txt";
const IDENTITY: &str = "identity";

fn join(v: &[usize]) -> String {
    v.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

/// Factor files are `U1.csv`, `U2.csv`, ... (1-based like the CLI).
pub fn write_model(model: &OntdModel, dir: &Path, format: TensorFormat) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let core_name = format!("core.{}", format.extension());
    write_tensor(model.core(), &dir.join(&core_name), format)?;
    let mut index = format!(
        "order = {}\ndims = {}\nranks = {}\ncore = {core_name}\n",
        model.order(),
        join(&model.dims()),
        join(&model.ranks())
    );
    for (n, f) in model.factors().iter().enumerate() {
        let entry = match f {
            ModeFactor::Identity(_) => IDENTITY.to_string(),
            ModeFactor::Factor(u) => {
                let name = format!("U{}.csv", n + 1);
                write_matrix_csv(u.matrix(), &dir.join(&name))?;
                name
            }
        };
        index.push_str(&format!("factor{} = {entry}\n", n + 1));
    }
    let path = dir.join(INDEX_FILE);
    fs::write(&path, index).map_err(|e| CliError::io(&path, e))
}

pub fn read_model(dir: &Path) -> Result<OntdModel> {
    let path = dir.join(INDEX_FILE);
    let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    let entries: BTreeMap<&str, &str> = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| CliError::format(&path, format!("expected key = value, got {l:?}")))
        })
        .collect::<Result<_>>()?;
    let get = |k: &str| entries.get(k).copied().ok_or_else(|| CliError::format(&path, format!("missing {k}")));
    let dims = parse_list("dims", get("dims")?).map_err(|e| CliError::format(&path, e.to_string()))?;
    let (core, _) = read_tensor(&dir.join(get("core")?))?;
    let factors = (0..dims.len())
        .map(|n| {
            let entry = get(&format!("factor{}", n + 1))?;
            if entry == IDENTITY {
                return Ok(ModeFactor::Identity(dims[n]));
            }
            let file = dir.join(entry);
            let u = FactorMatrix::new(read_matrix_csv(&file)?).map_err(|e| CliError::format(&file, e.to_string()))?;
            Ok(ModeFactor::Factor(u))
        })
        .collect::<Result<Vec<_>>>()?;
    let model = OntdModel::new(core, factors).map_err(|e| CliError::format(&path, e.to_string()))?;
    if model.dims() != dims {
        return Err(CliError::format(&path, format!("dims {dims:?} disagree with factors {:?}", model.dims())));
    }
    Ok(model)
}
