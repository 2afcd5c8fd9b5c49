/**
 * Keyboard shortcuts for the review queue.
 *
 *   a       accept the current AI label
 *   c       open the correction input (Enter submits, Escape cancels)
 *   f       flag the current item for later attention
 *   s       skip to the next item without a verdict
 *   ?       toggle the shortcut help panel
 *
 * Shortcuts stay quiet while the user is typing in an input or textarea,
 * except Enter/Escape which complete or cancel the correction flow.
 */

export interface ReviewKeyHandlers {
  accept: () => void;
  beginCorrect: () => void;
  submitCorrect: () => void;
  cancelCorrect: () => void;
  flag: () => void;
  skip: () => void;
  toggleHelp: () => void;
  /** True while the correction input owns the keyboard. */
  isCorrecting: () => boolean;
}

export const SHORTCUTS: ReadonlyArray<{ key: string; does: string }> = [
  { key: 'a', does: 'accept label' },
  { key: 'c', does: 'correct label' },
  { key: 'f', does: 'flag item' },
  { key: 's', does: 'skip item' },
  { key: '?', does: 'toggle help' },
];

function isTypingTarget(target: EventTarget | null): boolean {
  if (!target || !(target instanceof HTMLElement)) {
    return false;
  }
  const tag = target.tagName;
  return tag === 'INPUT' || tag === 'TEXTAREA' || target.isContentEditable;
}

export function createReviewKeyHandler(handlers: ReviewKeyHandlers) {
  return (event: KeyboardEvent): void => {
    if (event.ctrlKey || event.metaKey || event.altKey) {
      return; // leave browser/system chords alone
    }

    if (handlers.isCorrecting()) {
      if (event.key === 'Enter') {
        handlers.submitCorrect();
        event.preventDefault();
      } else if (event.key === 'Escape') {
        handlers.cancelCorrect();
        event.preventDefault();
      }
      return; // everything else is text entry
    }

    if (isTypingTarget(event.target)) {
      return;
    }

    switch (event.key) {
      case 'a':
        handlers.accept();
        break;
      case 'c':
        handlers.beginCorrect();
        break;
      case 'f':
        handlers.flag();
        break;
      case 's':
        handlers.skip();
        break;
      case '?':
        handlers.toggleHelp();
        break;
      default:
        return;
    }
    event.preventDefault();
  };
}
