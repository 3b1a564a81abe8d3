# Version: 0.1
# Last Modified: 2026-10-18
# Changes: Init file for satisfaction_app package
