#!/usr/bin/env python3
"""
Clean up virtual environment, caches and experiment output
"""
import os
import shutil
import glob

def clean_project():
    """Remove virtual environment, cache files and generated curves"""
    
    # Directories to remove
    dirs_to_remove = [
        'venv',
        '.pytest_cache',
        '__pycache__',
        'fblsc/__pycache__',
        'fblsc/commands/__pycache__',
        'fblsc/services/__pycache__',
        'tests/__pycache__',
        'out'
    ]
    
    # File patterns to remove
    file_patterns = [
        '*.pyc',
        'fblsc/*.pyc',
        'fblsc/commands/*.pyc',
        'fblsc/services/*.pyc',
        'tests/*.pyc',
        'fig-*.csv'
    ]
    
    print("🧹 Cleaning project...")
    
    # Remove directories
    for dir_path in dirs_to_remove:
        if os.path.exists(dir_path):
            print(f"Removing directory: {dir_path}")
            shutil.rmtree(dir_path)
    
    # Remove files
    for pattern in file_patterns:
        for file_path in glob.glob(pattern):
            print(f"Removing file: {file_path}")
            os.remove(file_path)
    
    print("✅ Project cleaned successfully!")

if __name__ == '__main__':
    clean_project()
