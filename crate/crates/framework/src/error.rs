use simsync_protocol::model_xml::XmlError;
use simsync_protocol::ClientError;

#[derive(Debug, thiserror::Error)]
pub enum FrameworkError {
    #[error(transparent)]
    Client(#[from] ClientError),
    #[error(transparent)]
    Xml(#[from] XmlError),
    #[error("tracker '{0}' is already registered")]
    DuplicateTracker(String),
    #[error("a behaviour named '{0}' is already registered")]
    DuplicateBehaviour(String),
    #[error("behaviour '{0}' has already been spawned")]
    AlreadySpawned(String),
    #[error("behaviour '{0}' is not spawned")]
    NotSpawned(String),
    #[error("'{0}' is not alive")]
    NotAlive(String),
    #[error("effect is already attached")]
    EffectAttached,
    #[error("effect is not attached")]
    EffectNotAttached,
    #[error("effect failed: {0}")]
    Effect(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("entry '{name}' rejected with {status:?}")]
    Rejected {
        name: String,
        status: simsync_protocol::EntryStatus,
    },
}
