use std::path::Path;

use crate::HarnessError;

/// One prompt per non-blank line, in file order.
pub fn load_dataset(path: &Path) -> Result<Vec<String>, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|_| HarnessError::FileNotFound(path.to_path_buf()))?;
    let prompts: Vec<String> = text.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect();
    if prompts.is_empty() {
        return Err(HarnessError::EmptyDataset(path.to_path_buf()));
    }
    Ok(prompts)
}
