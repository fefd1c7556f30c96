//! Optional structured per-event trace: one line per event with stable
//! field order (`t= role= event= txn=`), suitable for golden-trace
//! comparisons.

use std::cell::RefCell;
use std::rc::Rc;

/// Shared line buffer. The handle survives a halted run, so the driver can
/// dump the trace collected up to an invariant violation.
pub type TraceHandle = Rc<RefCell<Vec<String>>>;

pub fn buffer() -> TraceHandle {
    Rc::new(RefCell::new(Vec::new()))
}

/// Renders the buffered trace as line-oriented text.
pub fn render(handle: &TraceHandle) -> String {
    let mut out = String::new();
    for line in handle.borrow().iter() {
        out.push_str(line);
        out.push('\n');
    }
    out
}
