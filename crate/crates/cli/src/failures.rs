use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct Failure {
    pub item: String,
    pub error: String,
}

/// Per-item errors collected while a command keeps going.
#[derive(Debug, Default, Serialize)]
pub struct Failures {
    pub errors: Vec<Failure>,
}

impl Failures {
    pub fn single(item: impl Into<String>, error: impl Into<String>) -> Self {
        let mut f = Failures::default();
        f.push(item, error);
        f
    }

    pub fn push(&mut self, item: impl Into<String>, error: impl Into<String>) {
        let (item, error) = (item.into(), error.into());
        log::error!("{item}: {error}");
        self.errors.push(Failure { item, error });
    }

    pub fn is_empty(&self) -> bool {
        self.errors.is_empty()
    }

    /// Prints the error list as one JSON object on standard error.
    pub fn report(&self) {
        eprintln!("{}", serde_json::to_string(self).expect("serializable"));
    }
}
