import logging
import sys

from app.cli import EXIT_CONFIG, EXIT_INTEGRATION, main as cli_main
from app.config import Config
from app.errors import ConfigError

logger = logging.getLogger(__name__)


def main():
    """Main entry point for the crossing simulator."""
    try:
        # Validate the built-in defaults
        Config.validate()

        sys.exit(cli_main())
    except ConfigError as e:
        print(f"Configuration error: {e}")
        print("Please check the defaults in app/config.py.")
        sys.exit(EXIT_CONFIG)
    except KeyboardInterrupt:
        print("Interrupted")
        sys.exit(130)
    except Exception as e:
        logger.exception("Unexpected failure")
        print(f"Failed to run simulation: {e}")
        sys.exit(EXIT_INTEGRATION)


if __name__ == "__main__":
    main()
